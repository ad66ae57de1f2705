use std::collections::HashMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Metric, ScenarioConfig};
use crate::array::{effective_eigenvalue_count, subspace_ratio, Subspace};
use crate::channel::{random_ris_configuration, synthesize_pilots, ChannelScenario, GroundTruthChannels};
use crate::estimator::{
    run_nb_mle, run_nlos_unaware_mle, run_proposed_mle, trial_terms, AngleGrid, ChannelEstimate,
    EstimatorKind, EstimatorWorkspace, NmseAccumulator,
};
use crate::{Error, Result};

/// Parameter swept by [`run_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Pilot power in dBm.
    PilotPower,
    /// κ of the RIS–UE link in dB.
    KappaRisUe,
    /// κ of both BS–RIS and RIS–UE links in dB.
    KappaBoth,
    /// Side length of square BS and RIS arrays.
    Dimension,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::PilotPower => "pilot_power_dbm",
            SweepAxis::KappaRisUe => "kappa_ris_ue_db",
            SweepAxis::KappaBoth => "kappa_both_db",
            SweepAxis::Dimension => "dimension",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "p" | "power" | "pilot_power_dbm" => Ok(SweepAxis::PilotPower),
            "kappa-ris-ue" | "kappa_ris_ue_db" => Ok(SweepAxis::KappaRisUe),
            "kappa-both" | "kappa_both_db" => Ok(SweepAxis::KappaBoth),
            "dimension" => Ok(SweepAxis::Dimension),
            other => Err(Error::Config(format!(
                "unknown sweep axis '{other}' (expected p, kappa-ris-ue, kappa-both or dimension)"
            ))),
        }
    }

    /// Copy of `base` with this axis set to `value`.
    pub fn apply(&self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        if !value.is_finite() {
            return Err(Error::Config(format!("sweep value {value} is not finite")));
        }
        let mut cfg = base.clone();
        match self {
            SweepAxis::PilotPower => cfg.pilot_power_dbm = value,
            SweepAxis::KappaRisUe => cfg.kappa_ris_ue_db = value,
            SweepAxis::KappaBoth => {
                cfg.kappa_bs_ris_db = value;
                cfg.kappa_ris_ue_db = value;
            }
            SweepAxis::Dimension => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::Config(format!("dimension must be a positive integer, got {value}")));
                }
                let n = value as usize;
                cfg.bs_rows = n;
                cfg.bs_cols = n;
                cfg.ris_rows = n;
                cfg.ris_cols = n;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One aggregated value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub estimator: String,
    pub metric: String,
    /// Linear value; emitted in dB.
    pub value: f64,
    pub trials: usize,
    pub degenerate_count: usize,
    pub failed_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub config_hash: String,
    pub config: ScenarioConfig,
    pub rows: Vec<MetricRow>,
}

impl SweepPoint {
    pub fn get(&self, estimator: &str, metric: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.estimator == estimator && r.metric == metric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub seed: u64,
    pub config_hash: String,
    pub config: ScenarioConfig,
    pub axis: String,
    pub points: Vec<SweepPoint>,
    /// Wall-clock seconds; not part of emitted files.
    pub elapsed_secs: f64,
}

impl ExperimentResult {
    pub fn empty(config: &ScenarioConfig, axis: &str) -> Self {
        Self {
            seed: config.seed,
            config_hash: config.hash(),
            config: config.clone(),
            axis: axis.to_string(),
            points: Vec::new(),
            elapsed_secs: 0.0,
        }
    }

    /// Linear value of `metric` for `estimator` at each sweep point.
    pub fn series(&self, estimator: &str, metric: &str) -> Vec<Option<f64>> {
        self.points
            .iter()
            .map(|p| p.get(estimator, metric).map(|r| r.value))
            .collect()
    }
}

/// Independent RNG stream of one trial: the same `(seed, trial)` always
/// yields the same stream, whatever thread runs it.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Per-estimator contributions of a single trial.
#[derive(Debug, Clone, Default)]
struct TrialTerms {
    g: (f64, f64),
    d: (f64, f64),
    aoa: (f64, f64),
    degenerate: bool,
}

#[derive(Debug, Default, Clone)]
struct Aggregate {
    g: NmseAccumulator,
    d: NmseAccumulator,
    aoa: NmseAccumulator,
    degenerate: usize,
    failed: usize,
}

fn aoa_terms(est: &ChannelEstimate, truth: f64) -> (f64, f64) {
    let n = est.los.len() as f64;
    let err = est.los.iter().map(|l| (l.aoa - truth).powi(2)).sum::<f64>() / n;
    (err, truth * truth)
}

fn evaluate(
    kind: EstimatorKind,
    est: &ChannelEstimate,
    truth: &GroundTruthChannels,
    cfg: &ScenarioConfig,
) -> Result<TrialTerms> {
    Ok(TrialTerms {
        g: trial_terms(&est.g_hat, &truth.g, cfg.nmse_normalization)?,
        d: trial_terms(&est.d_hat, &truth.d, cfg.nmse_normalization)?,
        aoa: aoa_terms(est, truth.los.aoa),
        degenerate: est.is_degenerate() || (kind == EstimatorKind::Proposed && est.psd_warning),
    })
}

/// One Monte-Carlo trial: every selected estimator sees the same observation.
fn run_trial(
    scenario: &ChannelScenario,
    cfg: &ScenarioConfig,
    grid: &AngleGrid,
    trial: usize,
) -> Result<Vec<TrialTerms>> {
    let mut rng = trial_rng(cfg.seed, trial);
    let truth = scenario.draw(&mut rng)?;
    let ris = random_ris_configuration(&mut rng, scenario.geom_ris.elements())?;
    let obs = synthesize_pilots(&truth, &ris, cfg.pilot_power(), cfg.noise_var(), &mut rng)?;

    let needs_identity = cfg.estimators.iter().any(|k| *k != EstimatorKind::Proposed);
    let identity = if needs_identity {
        Some(EstimatorWorkspace::identity(&truth.h, &ris, &scenario.geom_ris)?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(cfg.estimators.len());
    for &kind in &cfg.estimators {
        let est = match kind {
            EstimatorKind::Proposed => {
                let ws = EstimatorWorkspace::build_with_tol(
                    &truth.h,
                    &ris,
                    &scenario.geom_ris,
                    &scenario.ud,
                    &scenario.ug,
                    cfg.svd_rel_tol,
                )?;
                run_proposed_mle(&ws, &obs, grid)?
            }
            EstimatorKind::NlosUnaware => run_nlos_unaware_mle(identity.as_ref().unwrap(), &obs, grid)?,
            EstimatorKind::NbMle => run_nb_mle(identity.as_ref().unwrap(), &obs, grid)?,
        };
        out.push(evaluate(kind, &est, &truth, cfg)?);
    }
    Ok(out)
}

fn run_point(scenario: &ChannelScenario, cfg: &ScenarioConfig) -> Result<Vec<MetricRow>> {
    let grid = cfg.grid()?;
    let per_trial: Vec<Result<Vec<TrialTerms>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(scenario, cfg, &grid, t))
        .collect();

    // ordered reduction by trial index
    let mut aggs = vec![Aggregate::default(); cfg.estimators.len()];
    for result in per_trial {
        match result {
            Ok(terms) => {
                for (agg, t) in aggs.iter_mut().zip(terms) {
                    agg.g.add_terms(t.g.0, t.g.1);
                    agg.d.add_terms(t.d.0, t.d.1);
                    agg.aoa.add_terms(t.aoa.0, t.aoa.1);
                    agg.degenerate += usize::from(t.degenerate);
                }
            }
            Err(_) => aggs.iter_mut().for_each(|a| a.failed += 1),
        }
    }

    let mut rows = Vec::new();
    for (kind, agg) in cfg.estimators.iter().zip(&aggs) {
        for metric in &cfg.metrics {
            let acc = match metric {
                Metric::NmseG => &agg.g,
                Metric::NmseD => &agg.d,
                Metric::NmseAoa => &agg.aoa,
            };
            // zero-power truths have no defined NMSE and produce no row
            if let Ok(value) = acc.value() {
                rows.push(MetricRow {
                    estimator: kind.name().to_string(),
                    metric: metric.name().to_string(),
                    value,
                    trials: acc.trials(),
                    degenerate_count: agg.degenerate,
                    failed_trials: agg.failed,
                });
            }
        }
    }
    Ok(rows)
}

/// Caches reduced subspaces per array geometry across sweep points.
#[derive(Default)]
struct SubspaceCache {
    entries: HashMap<String, Subspace>,
}

impl SubspaceCache {
    fn get(&mut self, geom: &crate::array::ArrayGeometry, cfg: &ScenarioConfig) -> Result<Subspace> {
        let key = format!("{geom:?}/{}", cfg.subspace_threshold);
        if let Some(s) = self.entries.get(&key) {
            return Ok(s.clone());
        }
        let s = Subspace::from_geometry(geom, cfg.threshold_policy())?;
        self.entries.insert(key, s.clone());
        Ok(s)
    }

    fn scenario(&mut self, cfg: &ScenarioConfig) -> Result<ChannelScenario> {
        let ud = self.get(&cfg.geom_bs()?, cfg)?;
        let ug = self.get(&cfg.geom_ris()?, cfg)?;
        cfg.scenario_with(ud, ug)
    }
}

/// Runs `config.trials` trials at each sweep value and aggregates NMSE per
/// estimator. Trials within a point run in parallel on the current rayon pool.
pub fn run_sweep(config: &ScenarioConfig, axis: SweepAxis, values: &[f64]) -> Result<ExperimentResult> {
    config.validate()?;
    let start = Instant::now();
    let mut result = ExperimentResult::empty(config, axis.name());
    let mut cache = SubspaceCache::default();
    for &value in values {
        let cfg = axis.apply(config, value)?;
        let scenario = cache.scenario(&cfg)?;
        let rows = run_point(&scenario, &cfg)?;
        result.points.push(SweepPoint {
            value,
            config_hash: cfg.hash(),
            config: cfg,
            rows,
        });
    }
    result.elapsed_secs = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Same as [`run_sweep`] on a dedicated pool with `workers` threads.
pub fn run_sweep_with_workers(
    config: &ScenarioConfig,
    axis: SweepAxis,
    values: &[f64],
    workers: usize,
) -> Result<ExperimentResult> {
    with_workers(workers, || run_sweep(config, axis, values))
}

pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    pool.install(f)
}

/// Tolerance for counting an eigenvalue of `Ā[s]` as effective.
pub const EFFECTIVE_EIGENVALUE_TOL: f64 = 1e-6;

/// Subspace tallness and the effective rank of `Ā[0]` for square arrays.
///
/// Rows use estimator `diagnostic`, metrics `subspace_ratio@<spacing>` and
/// `effective_eigenvalues@<spacing>`, swept over `config.fig2_dimensions`.
pub fn run_fig2_diagnostics(config: &ScenarioConfig) -> Result<ExperimentResult> {
    config.validate()?;
    if config.fig2_dimensions.is_empty() || config.fig2_spacings.is_empty() {
        return Err(Error::Config("fig2 needs at least one dimension and one spacing".into()));
    }
    let start = Instant::now();
    let mut result = ExperimentResult::empty(config, SweepAxis::Dimension.name());
    for &dim in &config.fig2_dimensions {
        let mut cfg = SweepAxis::Dimension.apply(config, dim as f64)?;
        let mut rows = Vec::new();
        for &spacing in &config.fig2_spacings {
            cfg.bs_spacing = spacing;
            cfg.ris_spacing = spacing;
            cfg.validate()?;
            let scenario = cfg.scenario()?;
            let m = scenario.geom_bs.elements();
            let ratio = subspace_ratio(&scenario.ud, m);

            let trials = cfg.fig2_trials.max(1);
            let counts: Vec<Result<usize>> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(cfg.seed, t);
                    let truth = scenario.draw(&mut rng)?;
                    let ris = random_ris_configuration(&mut rng, scenario.geom_ris.elements())?;
                    let ws = EstimatorWorkspace::build_with_tol(
                        &truth.h[..1],
                        &ris,
                        &scenario.geom_ris,
                        &scenario.ud,
                        &scenario.ug,
                        cfg.svd_rel_tol,
                    )?;
                    effective_eigenvalue_count(&ws.abar()[0], EFFECTIVE_EIGENVALUE_TOL)
                })
                .collect();
            let mut total = 0usize;
            for c in counts {
                total += c?;
            }
            let mean_count = total as f64 / trials as f64;
            for (metric, value, n) in [
                ("subspace_ratio", ratio, 1),
                ("effective_eigenvalues", mean_count, trials),
            ] {
                rows.push(MetricRow {
                    estimator: "diagnostic".into(),
                    metric: format!("{metric}@{spacing}"),
                    value,
                    trials: n,
                    degenerate_count: 0,
                    failed_trials: 0,
                });
            }
        }
        cfg.bs_spacing = config.bs_spacing;
        cfg.ris_spacing = config.ris_spacing;
        result.points.push(SweepPoint {
            value: dim as f64,
            config_hash: cfg.hash(),
            config: cfg,
            rows,
        });
    }
    result.elapsed_secs = start.elapsed().as_secs_f64();
    Ok(result)
}
