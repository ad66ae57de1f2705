use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::array::{ArrayGeometry, SteeringAngles, Subspace, ThresholdPolicy};
use crate::channel::{db_to_linear, ChannelScenario, ClusterNominal, LinkGainConfig};
use crate::estimator::{AngleGrid, EstimatorKind, NmseNormalization};
use crate::{Error, Result};

/// Metrics the harness can report per estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// NMSE of the RIS–UE channel `ĝ[s]`.
    NmseG,
    /// NMSE of the BS–UE channel `d̂[s]`.
    NmseD,
    /// `E{|âoa − aoa|²} / E{|aoa|²}`.
    NmseAoa,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::NmseG, Metric::NmseD, Metric::NmseAoa];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::NmseG => "nmse_g",
            Metric::NmseD => "nmse_d",
            Metric::NmseAoa => "nmse_aoa",
        }
    }
}

/// Flat scenario description; every field has a default so a config file
/// only needs the keys it changes. Angles are in radians, powers in dB/dBm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// BS elements per row (M_H).
    pub bs_cols: usize,
    /// BS elements per column (M_V).
    pub bs_rows: usize,
    pub ris_cols: usize,
    pub ris_rows: usize,
    /// Element spacings in wavelengths.
    pub bs_spacing: f64,
    pub ris_spacing: f64,
    /// Meters.
    pub wavelength: f64,
    pub subcarriers: usize,
    pub pilot_power_dbm: f64,
    pub noise_var_db: f64,
    pub kappa_bs_ris_db: f64,
    pub kappa_ris_ue_db: f64,
    /// LOS gain of a link is `base + κ`; its NLOS clusters carry `base` in total.
    pub bs_ris_base_gain_db: f64,
    pub ris_ue_base_gain_db: f64,
    /// Total NLOS gain of the LOS-blocked BS–UE link.
    pub bs_ue_gain_db: f64,
    pub bs_azimuth: f64,
    pub ris_azimuth: f64,
    pub ue_aoa: f64,
    pub ue_azimuth_from_bs: f64,
    pub elevation: f64,
    pub clusters_bs_ris: usize,
    pub clusters_ris_ue: usize,
    pub clusters_bs_ue: usize,
    pub azimuth_spread: f64,
    pub elevation_spread: f64,
    pub trials: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorKind>,
    pub metrics: Vec<Metric>,
    pub grid_points: usize,
    pub refine_tol: f64,
    /// Eigenvalues at or below this fraction of the largest are dropped.
    pub subspace_threshold: f64,
    pub svd_rel_tol: f64,
    pub nmse_normalization: NmseNormalization,
    pub fig2_dimensions: Vec<usize>,
    pub fig2_spacings: Vec<f64>,
    /// Realizations averaged for the effective eigenvalue count.
    pub fig2_trials: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            bs_cols: 8,
            bs_rows: 16,
            ris_cols: 8,
            ris_rows: 16,
            bs_spacing: 0.25,
            ris_spacing: 0.25,
            wavelength: 0.1,
            subcarriers: 16,
            pilot_power_dbm: 15.0,
            noise_var_db: -124.0,
            kappa_bs_ris_db: 16.0,
            kappa_ris_ue_db: 16.0,
            bs_ris_base_gain_db: -80.0,
            ris_ue_base_gain_db: -124.0,
            bs_ue_gain_db: -70.0,
            bs_azimuth: 0.0,
            ris_azimuth: PI / 4.0,
            ue_aoa: PI / 6.0,
            ue_azimuth_from_bs: PI / 3.0,
            elevation: 0.0,
            clusters_bs_ris: 40,
            clusters_ris_ue: 40,
            clusters_bs_ue: 40,
            azimuth_spread: ClusterNominal::DEFAULT_AZIMUTH_SPREAD,
            elevation_spread: ClusterNominal::DEFAULT_ELEVATION_SPREAD,
            trials: 200,
            seed: 1,
            estimators: EstimatorKind::ALL.to_vec(),
            metrics: Metric::ALL.to_vec(),
            grid_points: 2048,
            refine_tol: AngleGrid::default().refine_tol(),
            subspace_threshold: 1e-5,
            svd_rel_tol: crate::estimator::DEFAULT_SVD_REL_TOL,
            nmse_normalization: NmseNormalization::default(),
            fig2_dimensions: vec![5, 10, 15],
            fig2_spacings: vec![0.25, 0.5],
            fig2_trials: 5,
        }
    }
}

/// Trial count of the full-scale preset.
pub const FULL_TRIALS: usize = 5000;

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("bs_cols", self.bs_cols),
            ("bs_rows", self.bs_rows),
            ("ris_cols", self.ris_cols),
            ("ris_rows", self.ris_rows),
            ("subcarriers", self.subcarriers),
            ("grid_points", self.grid_points),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        let finite = [
            ("bs_spacing", self.bs_spacing),
            ("ris_spacing", self.ris_spacing),
            ("wavelength", self.wavelength),
            ("pilot_power_dbm", self.pilot_power_dbm),
            ("noise_var_db", self.noise_var_db),
            ("kappa_bs_ris_db", self.kappa_bs_ris_db),
            ("kappa_ris_ue_db", self.kappa_ris_ue_db),
            ("bs_ris_base_gain_db", self.bs_ris_base_gain_db),
            ("ris_ue_base_gain_db", self.ris_ue_base_gain_db),
            ("bs_ue_gain_db", self.bs_ue_gain_db),
            ("azimuth_spread", self.azimuth_spread),
            ("elevation_spread", self.elevation_spread),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        if !(self.subspace_threshold >= 0.0 && self.svd_rel_tol >= 0.0 && self.refine_tol > 0.0) {
            return Err(Error::Config("thresholds must be non-negative".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("select at least one estimator".into()));
        }
        for (name, a) in [
            ("bs_azimuth", self.bs_azimuth),
            ("ris_azimuth", self.ris_azimuth),
            ("ue_aoa", self.ue_aoa),
            ("ue_azimuth_from_bs", self.ue_azimuth_from_bs),
            ("elevation", self.elevation),
        ] {
            SteeringAngles::new(a, 0.0).map_err(|e| Error::Config(format!("{name}: {e}")))?;
        }
        Ok(())
    }

    /// Short content hash of the configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..8])
    }

    /// Linear pilot power in watts.
    pub fn pilot_power(&self) -> f64 {
        db_to_linear(self.pilot_power_dbm - 30.0)
    }

    pub fn noise_var(&self) -> f64 {
        db_to_linear(self.noise_var_db)
    }

    pub fn geom_bs(&self) -> Result<ArrayGeometry> {
        ArrayGeometry::new(self.bs_rows, self.bs_cols, self.bs_spacing, self.wavelength)
    }

    pub fn geom_ris(&self) -> Result<ArrayGeometry> {
        ArrayGeometry::new(self.ris_rows, self.ris_cols, self.ris_spacing, self.wavelength)
    }

    pub fn threshold_policy(&self) -> ThresholdPolicy {
        ThresholdPolicy::Relative(self.subspace_threshold)
    }

    pub fn grid(&self) -> Result<AngleGrid> {
        AngleGrid::new(self.grid_points, self.refine_tol)
    }

    /// Channel scenario with freshly computed subspaces.
    pub fn scenario(&self) -> Result<ChannelScenario> {
        let geom_bs = self.geom_bs()?;
        let geom_ris = self.geom_ris()?;
        let ud = Subspace::from_geometry(&geom_bs, self.threshold_policy())?;
        let ug = Subspace::from_geometry(&geom_ris, self.threshold_policy())?;
        self.scenario_with(ud, ug)
    }

    /// Channel scenario reusing precomputed subspaces.
    pub fn scenario_with(&self, ud: Subspace, ug: Subspace) -> Result<ChannelScenario> {
        let geom_bs = self.geom_bs()?;
        let geom_ris = self.geom_ris()?;
        if ud.elements() != geom_bs.elements() || ug.elements() != geom_ris.elements() {
            return Err(Error::dims("subspaces do not match the configured arrays"));
        }
        let spread = |c: ClusterNominal| ClusterNominal {
            azimuth_spread: self.azimuth_spread,
            elevation_spread: self.elevation_spread,
            ..c
        };
        let angle = |az: f64| SteeringAngles::new(az, self.elevation);
        Ok(ChannelScenario {
            geom_bs,
            geom_ris,
            ud,
            ug,
            subcarriers: self.subcarriers,
            bs_ris: LinkGainConfig::rician(self.bs_ris_base_gain_db + self.kappa_bs_ris_db, self.kappa_bs_ris_db)?,
            ris_ue: LinkGainConfig::rician(self.ris_ue_base_gain_db + self.kappa_ris_ue_db, self.kappa_ris_ue_db)?,
            bs_ue: LinkGainConfig::blocked(self.bs_ue_gain_db)?,
            bs_ris_nominal: spread(ClusterNominal::pair(angle(self.bs_azimuth)?, angle(self.ris_azimuth)?)),
            ris_ue_nominal: spread(ClusterNominal::single(SteeringAngles::azimuth_only(self.ue_aoa)?)),
            bs_ue_nominal: spread(ClusterNominal::single(angle(self.ue_azimuth_from_bs)?)),
            clusters_bs_ris: self.clusters_bs_ris,
            clusters_ris_ue: self.clusters_ris_ue,
            clusters_bs_ue: self.clusters_bs_ue,
        })
    }
}
