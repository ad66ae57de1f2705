//! Channel estimators and the NMSE metric.

mod aoa;
mod baselines;
mod metrics;
mod mle;
mod workspace;

pub use aoa::{AngleGrid, DEGENERATE_NUMERATOR};
pub use baselines::{run_nb_mle, run_nlos_unaware_mle};
pub use metrics::{angle_nmse, nmse, trial_terms, NmseAccumulator, NmseNormalization};
pub use mle::{
    cascaded_component, estimate_aoa, estimate_gain, estimate_phase, estimate_xd, estimate_xg,
    mle_objective, run_proposed_mle, ChannelEstimate, LosEstimate, PhaseEstimate,
};
pub use workspace::{EstimatorWorkspace, DEFAULT_SVD_REL_TOL};

use serde::{Deserialize, Serialize};

/// The estimators the harness can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Proposed,
    NlosUnaware,
    NbMle,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [EstimatorKind::Proposed, EstimatorKind::NlosUnaware, EstimatorKind::NbMle];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Proposed => "proposed",
            EstimatorKind::NlosUnaware => "nlos-unaware",
            EstimatorKind::NbMle => "nb-mle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}
