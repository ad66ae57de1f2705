use serde::{Deserialize, Serialize};

use crate::linalg::CVector;
use crate::{Error, Result};

/// Denominator of the NMSE.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NmseNormalization {
    /// `E{Σ_s ‖x_s‖²}`
    #[default]
    PerSubcarrierPower,
    /// `E{‖Σ_s x_s‖²}`
    SummedVector,
}

/// Running numerator/denominator sums; combine trials in index order for
/// reproducible floating-point results.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NmseAccumulator {
    error: f64,
    power: f64,
    trials: usize,
}

impl NmseAccumulator {
    pub fn add_trial(&mut self, estimate: &[CVector], truth: &[CVector], norm: NmseNormalization) -> Result<()> {
        let (e, p) = trial_terms(estimate, truth, norm)?;
        self.add_terms(e, p);
        Ok(())
    }

    pub fn add_terms(&mut self, error: f64, power: f64) {
        self.error += error;
        self.power += power;
        self.trials += 1;
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn value(&self) -> Result<f64> {
        if !(self.power > 0.0) {
            return Err(Error::Degenerate("NMSE denominator is zero".into()));
        }
        Ok(self.error / self.power)
    }
}

/// Squared error and normalization power of one trial.
pub fn trial_terms(estimate: &[CVector], truth: &[CVector], norm: NmseNormalization) -> Result<(f64, f64)> {
    if estimate.len() != truth.len() {
        return Err(Error::dims(format!(
            "{} estimated subcarriers vs {} true",
            estimate.len(),
            truth.len()
        )));
    }
    let mut error = 0.0;
    for (e, t) in estimate.iter().zip(truth) {
        if e.len() != t.len() {
            return Err(Error::dims(format!("vector lengths {} vs {}", e.len(), t.len())));
        }
        error += (e - t).norm_squared();
    }
    let power = match norm {
        NmseNormalization::PerSubcarrierPower => truth.iter().map(|t| t.norm_squared()).sum(),
        NmseNormalization::SummedVector => match truth.first() {
            Some(first) => truth[1..].iter().fold(first.clone(), |acc, t| acc + t).norm_squared(),
            None => 0.0,
        },
    };
    Ok((error, power))
}

/// `E{Σ_s ‖x̂_s − x_s‖²} / E{Σ_s ‖x_s‖²}` over trials (or the summed-vector
/// denominator when requested).
pub fn nmse(estimates: &[Vec<CVector>], truths: &[Vec<CVector>], norm: NmseNormalization) -> Result<f64> {
    if estimates.len() != truths.len() {
        return Err(Error::dims(format!(
            "{} estimated trials vs {} true",
            estimates.len(),
            truths.len()
        )));
    }
    let mut acc = NmseAccumulator::default();
    for (e, t) in estimates.iter().zip(truths) {
        acc.add_trial(e, t, norm)?;
    }
    acc.value()
}

/// `E{|â − a|²} / E{|a|²}` for angle estimates.
pub fn angle_nmse(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    if estimates.len() != truths.len() {
        return Err(Error::dims("angle estimate and truth counts differ"));
    }
    let mut acc = NmseAccumulator::default();
    for (e, t) in estimates.iter().zip(truths) {
        acc.add_terms((e - t).powi(2), t * t);
    }
    acc.value()
}
