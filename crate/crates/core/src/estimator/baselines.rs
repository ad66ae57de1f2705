//! Reference estimators: the LOS-only MLE with `Ā[s] = I` (NLOS-unaware) and
//! its narrowband form applied to each subcarrier separately.

use super::aoa::AngleGrid;
use super::mle::{los_from, ChannelEstimate};
use super::workspace::EstimatorWorkspace;
use crate::array::azimuth_response;
use crate::channel::PilotObservation;
use crate::linalg::CVector;
use crate::{Error, Result};

fn require_identity(ws: &EstimatorWorkspace, obs: &PilotObservation) -> Result<()> {
    if !ws.is_identity() {
        return Err(Error::invalid(
            "LOS-only baselines need a workspace built with EstimatorWorkspace::identity",
        ));
    }
    if !(obs.power.is_finite() && obs.power > 0.0) {
        return Err(Error::invalid(format!("pilot power must be > 0, got {}", obs.power)));
    }
    ws.check_observation(&obs.y)
}

/// Wideband LOS-only MLE: `ĝ[s] = √β̂·e^{jφ̂}·a(AoA)`, `d̂[s] = 0`.
pub fn run_nlos_unaware_mle(
    ws: &EstimatorWorkspace,
    obs: &PilotObservation,
    grid: &AngleGrid,
) -> Result<ChannelEstimate> {
    require_identity(ws, obs)?;
    let stat = ws.los_statistic(&obs.y, 0..ws.subcarriers());
    let los = los_from(&stat, ws, obs.power, grid)?;
    let g = azimuth_response(ws.geom_ris(), los.aoa) * los.amplitude();
    let s = ws.subcarriers();
    Ok(ChannelEstimate {
        los: vec![los],
        xg_hat: vec![CVector::zeros(0); s],
        xd_hat: vec![CVector::zeros(0); s],
        g_hat: vec![g; s],
        d_hat: vec![CVector::zeros(ws.bs_elements()); s],
        psd_warning: false,
    })
}

/// Narrowband MLE run independently on every subcarrier; each subcarrier's
/// `ĝ[s]` uses that subcarrier's own LOS estimate.
pub fn run_nb_mle(ws: &EstimatorWorkspace, obs: &PilotObservation, grid: &AngleGrid) -> Result<ChannelEstimate> {
    require_identity(ws, obs)?;
    let s_count = ws.subcarriers();
    let mut los = Vec::with_capacity(s_count);
    let mut g_hat = Vec::with_capacity(s_count);
    for s in 0..s_count {
        let stat = ws.los_statistic(&obs.y, [s]);
        let est = los_from(&stat, ws, obs.power, grid)?;
        g_hat.push(azimuth_response(ws.geom_ris(), est.aoa) * est.amplitude());
        los.push(est);
    }
    Ok(ChannelEstimate {
        los,
        xg_hat: vec![CVector::zeros(0); s_count],
        xd_hat: vec![CVector::zeros(0); s_count],
        g_hat,
        d_hat: vec![CVector::zeros(ws.bs_elements()); s_count],
        psd_warning: false,
    })
}
