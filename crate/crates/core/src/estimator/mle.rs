//! The wideband parametric MLE.
//!
//! With `x_d` and `x_g` profiled out in closed form, the LOS parameters come
//! from a one-dimensional search over the AoA of
//! `|Σ_s yᴴ[s]·Ā[s]·H̄[s]·a(φ)|² / Σ_s aᴴ(φ)·H̄ᴴ[s]·Ā[s]·H̄[s]·a(φ)`,
//! after which phase and gain follow directly and the NLOS coordinates are
//! least-squares projections of the residual.

use serde::{Deserialize, Serialize};

use super::aoa::{search, AngleGrid};
use super::workspace::{EstimatorWorkspace, LosStatistic};
use crate::array::{azimuth_response, column_phase_response};
use crate::channel::PilotObservation;
use crate::linalg::{CVector, C64};
use crate::{Error, Result};

/// LOS parameters `(β̂, φ̂, AoA)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosEstimate {
    pub beta: f64,
    pub phase: f64,
    pub aoa: f64,
    /// Set when the observation did not determine these values.
    pub degenerate: bool,
}

impl LosEstimate {
    fn degenerate() -> Self {
        Self {
            beta: 0.0,
            phase: 0.0,
            aoa: 0.0,
            degenerate: true,
        }
    }

    /// `√β̂·e^{jφ̂}`
    pub fn amplitude(&self) -> C64 {
        C64::from_polar(self.beta.sqrt(), self.phase)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    /// One entry for wideband estimators, one per subcarrier for the
    /// narrowband baseline.
    pub los: Vec<LosEstimate>,
    pub xg_hat: Vec<CVector>,
    pub xd_hat: Vec<CVector>,
    pub g_hat: Vec<CVector>,
    pub d_hat: Vec<CVector>,
    pub psd_warning: bool,
}

impl ChannelEstimate {
    pub fn beta_hat(&self) -> f64 {
        self.los[0].beta
    }

    pub fn phi_hat(&self) -> f64 {
        self.los[0].phase
    }

    pub fn aoa_hat(&self) -> f64 {
        self.los[0].aoa
    }

    pub fn is_degenerate(&self) -> bool {
        self.los.iter().any(|l| l.degenerate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEstimate {
    pub phase: f64,
    pub degenerate: bool,
}

fn statistic(ws: &EstimatorWorkspace, obs: &PilotObservation) -> Result<LosStatistic> {
    ws.check_observation(&obs.y)?;
    if !(obs.power.is_finite() && obs.power > 0.0) {
        return Err(Error::invalid(format!("pilot power must be > 0, got {}", obs.power)));
    }
    Ok(ws.los_statistic(&obs.y, 0..ws.subcarriers()))
}

pub(crate) fn phase_from(stat: &LosStatistic, ws: &EstimatorWorkspace, aoa: f64) -> PhaseEstimate {
    let inner = stat.inner(&column_phase_response(ws.geom_ris(), aoa));
    if inner.norm() == 0.0 {
        return PhaseEstimate {
            phase: 0.0,
            degenerate: true,
        };
    }
    let mut phase = -inner.arg();
    if phase <= -std::f64::consts::PI {
        phase += 2.0 * std::f64::consts::PI;
    }
    PhaseEstimate {
        phase: phase + 0.0,
        degenerate: false,
    }
}

pub(crate) fn gain_from(stat: &LosStatistic, ws: &EstimatorWorkspace, aoa: f64, power: f64) -> Result<f64> {
    let c = column_phase_response(ws.geom_ris(), aoa);
    let energy = stat.energy(&c);
    if energy <= 0.0 {
        return Err(Error::Degenerate(format!(
            "steered direction {aoa:.6} rad is invisible through Ā"
        )));
    }
    Ok(stat.inner(&c).norm_sqr() / (power * energy * energy))
}

/// LOS parameters from a statistic, flagging rather than failing on degenerate input.
pub(crate) fn los_from(
    stat: &LosStatistic,
    ws: &EstimatorWorkspace,
    power: f64,
    grid: &AngleGrid,
) -> Result<LosEstimate> {
    let aoa = match search(stat, ws.geom_ris(), grid) {
        Ok(a) => a,
        Err(Error::Degenerate(_)) => return Ok(LosEstimate::degenerate()),
        Err(e) => return Err(e),
    };
    let phase = phase_from(stat, ws, aoa);
    match gain_from(stat, ws, aoa, power) {
        Ok(beta) => Ok(LosEstimate {
            beta,
            phase: phase.phase,
            aoa,
            degenerate: phase.degenerate,
        }),
        Err(Error::Degenerate(_)) => Ok(LosEstimate {
            aoa,
            ..LosEstimate::degenerate()
        }),
        Err(e) => Err(e),
    }
}

/// AoA maximizing the subcarrier-summed objective.
pub fn estimate_aoa(ws: &EstimatorWorkspace, obs: &PilotObservation, grid: &AngleGrid) -> Result<f64> {
    search(&statistic(ws, obs)?, ws.geom_ris(), grid)
}

/// `φ̂ = −arg(Σ_s yᴴ[s]·Ā[s]·H̄[s]·a(aoa))`, in `(−π, π]`.
pub fn estimate_phase(ws: &EstimatorWorkspace, obs: &PilotObservation, aoa: f64) -> Result<PhaseEstimate> {
    if !aoa.is_finite() {
        return Err(Error::invalid("AoA must be finite"));
    }
    Ok(phase_from(&statistic(ws, obs)?, ws, aoa))
}

/// `β̂ = |Σ_s yᴴ·Ā·H̄·a|² / (P·(Σ_s aᴴ·H̄ᴴ·Ā·H̄·a)²)`.
pub fn estimate_gain(ws: &EstimatorWorkspace, obs: &PilotObservation, aoa: f64) -> Result<f64> {
    if !aoa.is_finite() {
        return Err(Error::invalid("AoA must be finite"));
    }
    gain_from(&statistic(ws, obs)?, ws, aoa, obs.power)
}

/// `x̂_g[s] = V_A·Σ_A⁻¹·U_Aᴴ·(y[s]/√P − √β̂·e^{jφ̂}·H̄[s]·a(aoa))`.
pub fn estimate_xg(
    ws: &EstimatorWorkspace,
    obs: &PilotObservation,
    beta_hat: f64,
    phi_hat: f64,
    aoa_hat: f64,
) -> Result<Vec<CVector>> {
    ws.check_observation(&obs.y)?;
    let los = azimuth_response(ws.geom_ris(), aoa_hat) * C64::from_polar(beta_hat.max(0.0).sqrt(), phi_hat);
    let inv_sqrt_p = 1.0 / obs.power.sqrt();
    Ok(obs
        .y
        .iter()
        .zip(ws.hbar())
        .zip(ws.svd())
        .map(|((y, hbar), svd)| svd.solve(&(y * C64::new(inv_sqrt_p, 0.0) - hbar * &los)))
        .collect())
}

/// `c_g[s] = √P·(√β̂·e^{jφ̂}·H̄[s]·a(aoa) + H̄[s]·U_g·x̂_g[s])`.
pub fn cascaded_component(
    ws: &EstimatorWorkspace,
    power: f64,
    los: &LosEstimate,
    xg: &[CVector],
) -> Vec<CVector> {
    let g_los = azimuth_response(ws.geom_ris(), los.aoa) * los.amplitude();
    let sqrt_p = C64::new(power.sqrt(), 0.0);
    ws.hbar()
        .iter()
        .zip(xg)
        .map(|(hbar, x)| hbar * (&g_los + ws.ug().embed(x)) * sqrt_p)
        .collect()
}

/// `x̂_d[s] = (U_dᴴ·y[s] − U_dᴴ·c_g[s]) / √P`.
pub fn estimate_xd(ws: &EstimatorWorkspace, obs: &PilotObservation, c_g: &[CVector]) -> Result<Vec<CVector>> {
    ws.check_observation(&obs.y)?;
    ws.check_observation(c_g)?;
    let inv_sqrt_p = C64::new(1.0 / obs.power.sqrt(), 0.0);
    Ok(obs
        .y
        .iter()
        .zip(c_g)
        .map(|(y, c)| ws.ud().coordinates(&(y - c)) * inv_sqrt_p)
        .collect())
}

/// Negative log-likelihood up to constants:
/// `Σ_s ‖y[s] − √P·U_d·x_d[s] − c_g[s]‖²`.
pub fn mle_objective(
    ws: &EstimatorWorkspace,
    obs: &PilotObservation,
    los: &LosEstimate,
    xg: &[CVector],
    xd: &[CVector],
) -> Result<f64> {
    ws.check_observation(&obs.y)?;
    let c_g = cascaded_component(ws, obs.power, los, xg);
    let sqrt_p = C64::new(obs.power.sqrt(), 0.0);
    Ok(obs
        .y
        .iter()
        .zip(&c_g)
        .zip(xd)
        .map(|((y, c), x)| (y - ws.ud().embed(x) * sqrt_p - c).norm_squared())
        .sum())
}

/// Full pipeline: AoA → phase → gain → `x̂_g` → `x̂_d` → reconstruction.
pub fn run_proposed_mle(
    ws: &EstimatorWorkspace,
    obs: &PilotObservation,
    grid: &AngleGrid,
) -> Result<ChannelEstimate> {
    let stat = statistic(ws, obs)?;
    let los = los_from(&stat, ws, obs.power, grid)?;
    let xg_hat = estimate_xg(ws, obs, los.beta, los.phase, los.aoa)?;
    let c_g = cascaded_component(ws, obs.power, &los, &xg_hat);
    let xd_hat = estimate_xd(ws, obs, &c_g)?;

    let g_los = azimuth_response(ws.geom_ris(), los.aoa) * los.amplitude();
    let g_hat = xg_hat.iter().map(|x| &g_los + ws.ug().embed(x)).collect();
    let d_hat = xd_hat.iter().map(|x| ws.ud().embed(x)).collect();
    Ok(ChannelEstimate {
        los: vec![los],
        xg_hat,
        xd_hat,
        g_hat,
        d_hat,
        psd_warning: ws.psd_warning(),
    })
}
