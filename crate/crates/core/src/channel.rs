//! Ground-truth wideband channels and pilot observations.
//!
//! Every link is a LOS term plus `L` scattering clusters whose complex gains
//! are drawn independently per subcarrier. The BS–UE link has no LOS term.
//! UE-side NLOS vectors are projected onto the reduced subspace of the
//! receiving array, so `g̃[s] = U_g·x_g[s]` and `d[s] = U_d·x_d[s]` hold exactly.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::array::{azimuth_response, upa_response, ArrayGeometry, SteeringAngles, Subspace};
use crate::linalg::{CMatrix, CVector, C64};
use crate::{Error, Result};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Circularly-symmetric complex Gaussian sample with `E|z|² = variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * scale, im * scale)
}

/// LOS and total NLOS power of one link, linear scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGainConfig {
    los_power: f64,
    nlos_power: f64,
}

impl LinkGainConfig {
    pub fn from_linear(los_power: f64, nlos_power: f64) -> Result<Self> {
        for (name, v) in [("LOS", los_power), ("NLOS", nlos_power)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} power must be finite and >= 0, got {v}")));
            }
        }
        Ok(Self {
            los_power,
            nlos_power,
        })
    }

    /// LOS gain `los_gain_db` with K-factor `rician_k_db`; the NLOS clusters
    /// carry `LOS / κ` in total.
    pub fn rician(los_gain_db: f64, rician_k_db: f64) -> Result<Self> {
        if !(los_gain_db.is_finite() && rician_k_db.is_finite()) {
            return Err(Error::invalid("link gains must be finite"));
        }
        Self::from_linear(db_to_linear(los_gain_db), db_to_linear(los_gain_db - rician_k_db))
    }

    /// Blocked LOS, only scattered power.
    pub fn blocked(nlos_total_gain_db: f64) -> Result<Self> {
        if !nlos_total_gain_db.is_finite() {
            return Err(Error::invalid("link gains must be finite"));
        }
        Self::from_linear(0.0, db_to_linear(nlos_total_gain_db))
    }

    /// LOS path only.
    pub fn los_only(los_gain_db: f64) -> Result<Self> {
        if !los_gain_db.is_finite() {
            return Err(Error::invalid("link gains must be finite"));
        }
        Self::from_linear(db_to_linear(los_gain_db), 0.0)
    }

    pub fn los_power(&self) -> f64 {
        self.los_power
    }

    pub fn nlos_power(&self) -> f64 {
        self.nlos_power
    }

    /// `None` when either part is absent.
    pub fn rician_k_db(&self) -> Option<f64> {
        (self.los_power > 0.0 && self.nlos_power > 0.0)
            .then(|| linear_to_db(self.los_power / self.nlos_power))
    }
}

/// Angles of one scattering cluster. `far` is only present on links whose
/// both ends are arrays (BS–RIS).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterAngles {
    pub near: SteeringAngles,
    pub far: Option<SteeringAngles>,
}

/// Nominal directions and angular spread clusters are drawn around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterNominal {
    pub near: SteeringAngles,
    pub far: Option<SteeringAngles>,
    pub azimuth_spread: f64,
    pub elevation_spread: f64,
}

impl ClusterNominal {
    pub const DEFAULT_AZIMUTH_SPREAD: f64 = 4.0 * PI / 9.0;
    pub const DEFAULT_ELEVATION_SPREAD: f64 = 2.0 * PI / 9.0;

    pub fn single(near: SteeringAngles) -> Self {
        Self {
            near,
            far: None,
            azimuth_spread: Self::DEFAULT_AZIMUTH_SPREAD,
            elevation_spread: Self::DEFAULT_ELEVATION_SPREAD,
        }
    }

    pub fn pair(near: SteeringAngles, far: SteeringAngles) -> Self {
        Self {
            far: Some(far),
            ..Self::single(near)
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, nominal: SteeringAngles) -> Result<SteeringAngles> {
        let az = nominal.azimuth() + uniform_offset(rng, self.azimuth_spread);
        let el = nominal.elevation() + uniform_offset(rng, self.elevation_spread);
        SteeringAngles::folded(az, el)
    }
}

fn uniform_offset<R: Rng + ?Sized>(rng: &mut R, spread: f64) -> f64 {
    if spread > 0.0 {
        rng.random_range(-spread..=spread)
    } else {
        0.0
    }
}

/// `L` clusters with per-subcarrier gains `α[s, l]` (an `S × L` matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct NlosClusterSet {
    angles: Vec<ClusterAngles>,
    gains: CMatrix,
}

impl NlosClusterSet {
    pub fn new(angles: Vec<ClusterAngles>, gains: CMatrix) -> Result<Self> {
        if angles.len() != gains.ncols() {
            return Err(Error::dims(format!(
                "{} cluster angle sets but {} gain columns",
                angles.len(),
                gains.ncols()
            )));
        }
        Ok(Self { angles, gains })
    }

    /// No clusters on `subcarriers` subcarriers.
    pub fn empty(subcarriers: usize) -> Self {
        Self {
            angles: Vec::new(),
            gains: CMatrix::zeros(subcarriers, 0),
        }
    }

    pub fn count(&self) -> usize {
        self.angles.len()
    }

    pub fn subcarriers(&self) -> usize {
        self.gains.nrows()
    }

    pub fn angles(&self) -> &[ClusterAngles] {
        &self.angles
    }

    pub fn gains(&self) -> &CMatrix {
        &self.gains
    }

    /// `Σ_l α[s,l]·a(near_l)` for a single-ended link.
    pub fn vector(&self, geom: &ArrayGeometry, s: usize) -> CVector {
        let mut out = CVector::zeros(geom.elements());
        for (l, c) in self.angles.iter().enumerate() {
            out.axpy(self.gains[(s, l)], &upa_response(geom, c.near), C64::new(1.0, 0.0));
        }
        out
    }
}

/// Draws `count` clusters around `nominal` with i.i.d. `CN(0, total_power/count)`
/// gains on each of `subcarriers` subcarriers.
pub fn generate_nlos_clusters<R: Rng + ?Sized>(
    rng: &mut R,
    nominal: &ClusterNominal,
    count: usize,
    subcarriers: usize,
    total_power: f64,
) -> Result<NlosClusterSet> {
    if !(total_power.is_finite() && total_power >= 0.0) {
        return Err(Error::invalid(format!("total NLOS power must be >= 0, got {total_power}")));
    }
    if count == 0 {
        if total_power > 0.0 {
            return Err(Error::invalid("positive NLOS power requires at least one cluster"));
        }
        return Ok(NlosClusterSet::empty(subcarriers));
    }
    let mut angles = Vec::with_capacity(count);
    for _ in 0..count {
        let near = nominal.draw(rng, nominal.near)?;
        let far = match nominal.far {
            Some(f) => Some(nominal.draw(rng, f)?),
            None => None,
        };
        angles.push(ClusterAngles { near, far });
    }
    let per_cluster = total_power / count as f64;
    let mut gains = CMatrix::zeros(subcarriers, count);
    for s in 0..subcarriers {
        for l in 0..count {
            gains[(s, l)] = complex_gaussian(rng, per_cluster);
        }
    }
    NlosClusterSet::new(angles, gains)
}

/// Deterministic LOS term of the BS–RIS channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsRisLos {
    pub gain: f64,
    pub phase: f64,
    pub bs: SteeringAngles,
    pub ris: SteeringAngles,
}

/// `H[s] = √β̄·e^{jφ̄}·ā(bs)·aᵀ(ris) + Σ_l α[s,l]·ā(bs_l)·aᵀ(ris_l)`.
pub fn assemble_bs_ris_channel(
    geom_bs: &ArrayGeometry,
    geom_ris: &ArrayGeometry,
    los: &BsRisLos,
    clusters: &NlosClusterSet,
) -> Result<Vec<CMatrix>> {
    if !(los.gain.is_finite() && los.gain >= 0.0) {
        return Err(Error::invalid(format!("LOS gain must be >= 0, got {}", los.gain)));
    }
    let (m, n, l) = (geom_bs.elements(), geom_ris.elements(), clusters.count());
    let mut a_bs = CMatrix::zeros(m, l);
    let mut a_ris_t = CMatrix::zeros(l, n);
    for (i, c) in clusters.angles().iter().enumerate() {
        let far = c.far.ok_or_else(|| {
            Error::dims("BS-RIS clusters need angles at both the BS and the RIS")
        })?;
        a_bs.set_column(i, &upa_response(geom_bs, c.near));
        a_ris_t.set_row(i, &upa_response(geom_ris, far).transpose());
    }
    let los_term = upa_response(geom_bs, los.bs)
        * upa_response(geom_ris, los.ris).transpose()
        * C64::from_polar(los.gain.sqrt(), los.phase);
    Ok((0..clusters.subcarriers())
        .map(|s| {
            let mut weighted = a_ris_t.clone();
            for (i, mut row) in weighted.row_iter_mut().enumerate() {
                row *= clusters.gains()[(s, i)];
            }
            &los_term + &a_bs * weighted
        })
        .collect())
}

/// RIS–UE LOS parameters: gain `β`, phase `φ` and azimuth AoA (zero elevation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosParams {
    pub beta: f64,
    pub phase: f64,
    pub aoa: f64,
}

/// UE-side channels with their reduced-subspace coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct UeChannels {
    pub g: Vec<CVector>,
    pub d: Vec<CVector>,
    pub xg: Vec<CVector>,
    pub xd: Vec<CVector>,
}

/// `g[s] = √β·e^{jφ}·a(aoa) + U_g·x_g[s]` and `d[s] = U_d·x_d[s]`, where the
/// coordinates are projections of the clustered NLOS vectors.
pub fn assemble_ue_channels(
    geom_ris: &ArrayGeometry,
    geom_bs: &ArrayGeometry,
    ug: &Subspace,
    ud: &Subspace,
    los: &LosParams,
    g_clusters: &NlosClusterSet,
    d_clusters: &NlosClusterSet,
) -> Result<UeChannels> {
    if ug.elements() != geom_ris.elements() || ud.elements() != geom_bs.elements() {
        return Err(Error::dims(format!(
            "subspaces ({} / {} rows) do not match arrays ({} RIS / {} BS elements)",
            ug.elements(),
            ud.elements(),
            geom_ris.elements(),
            geom_bs.elements()
        )));
    }
    if g_clusters.subcarriers() != d_clusters.subcarriers() {
        return Err(Error::dims("RIS-UE and BS-UE clusters disagree on subcarrier count"));
    }
    if !(los.beta.is_finite() && los.beta >= 0.0) {
        return Err(Error::invalid(format!("LOS gain must be >= 0, got {}", los.beta)));
    }
    let los_g = azimuth_response(geom_ris, los.aoa) * C64::from_polar(los.beta.sqrt(), los.phase);
    let subcarriers = g_clusters.subcarriers();
    let mut out = UeChannels {
        g: Vec::with_capacity(subcarriers),
        d: Vec::with_capacity(subcarriers),
        xg: Vec::with_capacity(subcarriers),
        xd: Vec::with_capacity(subcarriers),
    };
    for s in 0..subcarriers {
        let xg = ug.coordinates(&g_clusters.vector(geom_ris, s));
        let xd = ud.coordinates(&d_clusters.vector(geom_bs, s));
        out.g.push(&los_g + ug.embed(&xg));
        out.d.push(ud.embed(&xd));
        out.xg.push(xg);
        out.xd.push(xd);
    }
    Ok(out)
}

/// Complete ground truth for one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthChannels {
    pub h: Vec<CMatrix>,
    pub g: Vec<CVector>,
    pub d: Vec<CVector>,
    pub xg: Vec<CVector>,
    pub xd: Vec<CVector>,
    pub los: LosParams,
}

impl GroundTruthChannels {
    pub fn new(h: Vec<CMatrix>, ue: UeChannels, los: LosParams) -> Result<Self> {
        let s = h.len();
        if ue.g.len() != s || ue.d.len() != s {
            return Err(Error::dims(format!(
                "{} BS-RIS subcarriers but {} / {} UE subcarriers",
                s,
                ue.g.len(),
                ue.d.len()
            )));
        }
        for (k, hs) in h.iter().enumerate() {
            if hs.nrows() != ue.d[k].len() || hs.ncols() != ue.g[k].len() {
                return Err(Error::dims(format!(
                    "subcarrier {k}: H is {}x{}, d has {} and g has {} entries",
                    hs.nrows(),
                    hs.ncols(),
                    ue.d[k].len(),
                    ue.g[k].len()
                )));
            }
        }
        Ok(Self {
            h,
            g: ue.g,
            d: ue.d,
            xg: ue.xg,
            xd: ue.xd,
            los,
        })
    }

    pub fn subcarriers(&self) -> usize {
        self.h.len()
    }

    pub fn bs_elements(&self) -> usize {
        self.h.first().map_or(0, |h| h.nrows())
    }

    pub fn ris_elements(&self) -> usize {
        self.h.first().map_or(0, |h| h.ncols())
    }
}

/// Phase profile `θ_1..θ_N` of the RIS during pilot transmission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisConfiguration {
    phases: Vec<f64>,
}

impl RisConfiguration {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::invalid("RIS configuration needs at least one element"));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("RIS phases must be finite"));
        }
        Ok(Self { phases })
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Diagonal of `Φ`.
    pub fn diagonal(&self) -> CVector {
        CVector::from_iterator(self.phases.len(), self.phases.iter().map(|&t| C64::from_polar(1.0, t)))
    }

    /// `H·Φ` (scales column `n` by `e^{jθ_n}`).
    pub fn apply(&self, h: &CMatrix) -> Result<CMatrix> {
        if h.ncols() != self.phases.len() {
            return Err(Error::dims(format!(
                "H has {} columns but the RIS has {} elements",
                h.ncols(),
                self.phases.len()
            )));
        }
        let mut out = h.clone();
        for (mut col, &t) in out.column_iter_mut().zip(&self.phases) {
            col *= C64::from_polar(1.0, t);
        }
        Ok(out)
    }
}

/// I.i.d. uniform phases on `[0, 2π)`.
pub fn random_ris_configuration<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<RisConfiguration> {
    if n == 0 {
        return Err(Error::invalid("RIS must have at least one element"));
    }
    RisConfiguration::new((0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect())
}

/// Received pilots `y[s]` under one RIS configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotObservation {
    pub y: Vec<CVector>,
    pub power: f64,
    pub noise_var: f64,
    pub ris: RisConfiguration,
}

impl PilotObservation {
    pub fn subcarriers(&self) -> usize {
        self.y.len()
    }

    /// The same observation with every `y[s]` multiplied by `c`.
    pub fn scaled(&self, c: C64) -> Self {
        Self {
            y: self.y.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }
}

/// Noise-free part `√P·d[s] + √P·H[s]·Φ·g[s]`.
pub fn noiseless_pilots(
    truth: &GroundTruthChannels,
    ris: &RisConfiguration,
    power: f64,
) -> Result<Vec<CVector>> {
    if !(power.is_finite() && power > 0.0) {
        return Err(Error::invalid(format!("pilot power must be > 0, got {power}")));
    }
    let sqrt_p = power.sqrt();
    let phi = ris.diagonal();
    if phi.len() != truth.ris_elements() {
        return Err(Error::dims(format!(
            "RIS configuration has {} phases, channels have {} RIS elements",
            phi.len(),
            truth.ris_elements()
        )));
    }
    Ok(truth
        .h
        .iter()
        .zip(&truth.g)
        .zip(&truth.d)
        .map(|((h, g), d)| (d + h * g.component_mul(&phi)) * C64::new(sqrt_p, 0.0))
        .collect())
}

/// `y[s] = √P·d[s] + √P·H[s]·Φ·g[s] + n[s]` with `n[s] ~ CN(0, σ²·I)`.
pub fn synthesize_pilots<R: Rng + ?Sized>(
    truth: &GroundTruthChannels,
    ris: &RisConfiguration,
    power: f64,
    noise_var: f64,
    rng: &mut R,
) -> Result<PilotObservation> {
    if !(noise_var.is_finite() && noise_var >= 0.0) {
        return Err(Error::invalid(format!("noise variance must be >= 0, got {noise_var}")));
    }
    let mut y = noiseless_pilots(truth, ris, power)?;
    if noise_var > 0.0 {
        for ys in &mut y {
            for z in ys.iter_mut() {
                *z += complex_gaussian(rng, noise_var);
            }
        }
    }
    Ok(PilotObservation {
        y,
        power,
        noise_var,
        ris: ris.clone(),
    })
}

/// Scenario-level description of the three links, shared across trials.
#[derive(Debug, Clone)]
pub struct ChannelScenario {
    pub geom_bs: ArrayGeometry,
    pub geom_ris: ArrayGeometry,
    pub ud: Subspace,
    pub ug: Subspace,
    pub subcarriers: usize,
    pub bs_ris: LinkGainConfig,
    pub ris_ue: LinkGainConfig,
    pub bs_ue: LinkGainConfig,
    /// BS-side and RIS-side nominal angles of the BS–RIS link.
    pub bs_ris_nominal: ClusterNominal,
    /// Nominal angle at the RIS of the RIS–UE link; also the LOS AoA.
    pub ris_ue_nominal: ClusterNominal,
    /// Nominal angle at the BS of the BS–UE clusters.
    pub bs_ue_nominal: ClusterNominal,
    pub clusters_bs_ris: usize,
    pub clusters_ris_ue: usize,
    pub clusters_bs_ue: usize,
}

impl ChannelScenario {
    /// Draws one realization. LOS phases are uniform on `[0, 2π)`; the AoA is
    /// the nominal RIS–UE azimuth.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GroundTruthChannels> {
        let s = self.subcarriers;
        let h_clusters = generate_nlos_clusters(
            rng,
            &self.bs_ris_nominal,
            self.clusters_for(self.clusters_bs_ris, &self.bs_ris),
            s,
            self.bs_ris.nlos_power(),
        )?;
        let bs_ris_los = BsRisLos {
            gain: self.bs_ris.los_power(),
            phase: rng.random_range(0.0..2.0 * PI),
            bs: self.bs_ris_nominal.near,
            ris: self.bs_ris_nominal.far.ok_or_else(|| {
                Error::invalid("BS-RIS nominal angles need a RIS-side direction")
            })?,
        };
        let h = assemble_bs_ris_channel(&self.geom_bs, &self.geom_ris, &bs_ris_los, &h_clusters)?;

        let los = LosParams {
            beta: self.ris_ue.los_power(),
            phase: rng.random_range(0.0..2.0 * PI),
            aoa: self.ris_ue_nominal.near.azimuth(),
        };
        let g_clusters = generate_nlos_clusters(
            rng,
            &self.ris_ue_nominal,
            self.clusters_for(self.clusters_ris_ue, &self.ris_ue),
            s,
            self.ris_ue.nlos_power(),
        )?;
        let d_clusters = generate_nlos_clusters(
            rng,
            &self.bs_ue_nominal,
            self.clusters_for(self.clusters_bs_ue, &self.bs_ue),
            s,
            self.bs_ue.nlos_power(),
        )?;
        let ue = assemble_ue_channels(
            &self.geom_ris,
            &self.geom_bs,
            &self.ug,
            &self.ud,
            &los,
            &g_clusters,
            &d_clusters,
        )?;
        GroundTruthChannels::new(h, ue, los)
    }

    // Links without NLOS power get no clusters.
    fn clusters_for(&self, count: usize, link: &LinkGainConfig) -> usize {
        if link.nlos_power() > 0.0 {
            count
        } else {
            0
        }
    }
}
