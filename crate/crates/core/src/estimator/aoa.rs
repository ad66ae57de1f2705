use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::workspace::LosStatistic;
use crate::array::{column_phase_response, ArrayGeometry};
use crate::linalg::{CVector, C64};
use crate::{Error, Result};

/// Numerators below this everywhere on the grid mean `y` carries no energy
/// along any steered direction.
pub const DEGENERATE_NUMERATOR: f64 = 1e-300;

/// Uniform azimuth grid over `[-π/2, π/2]` followed by golden-section
/// refinement around the best grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    points: usize,
    refine_tol: f64,
}

impl Default for AngleGrid {
    fn default() -> Self {
        Self {
            points: 2048,
            refine_tol: 1e-9,
        }
    }
}

impl AngleGrid {
    pub fn new(points: usize, refine_tol: f64) -> Result<Self> {
        if points == 0 {
            return Err(Error::invalid("angle grid must contain at least one point"));
        }
        if !(refine_tol.is_finite() && refine_tol > 0.0) {
            return Err(Error::invalid(format!("refinement tolerance must be > 0, got {refine_tol}")));
        }
        Ok(Self { points, refine_tol })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn refine_tol(&self) -> f64 {
        self.refine_tol
    }

    pub fn step(&self) -> f64 {
        if self.points > 1 {
            std::f64::consts::PI / (self.points - 1) as f64
        } else {
            0.0
        }
    }

    pub fn angle(&self, k: usize) -> f64 {
        if self.points == 1 {
            0.0
        } else {
            -FRAC_PI_2 + k as f64 * self.step()
        }
    }
}

/// `|bᴴc(φ)|² / c(φ)ᴴGc(φ)`, zero where the denominator vanishes.
pub(crate) fn objective(stat: &LosStatistic, geom: &ArrayGeometry, phi: f64) -> (f64, f64) {
    let c = column_phase_response(geom, phi);
    let num = stat.inner(&c).norm_sqr();
    let den = stat.energy(&c);
    let value = if den > 0.0 { num / den } else { 0.0 };
    (num, value)
}

/// Grid maximizer (smallest angle wins ties) refined by golden-section search
/// and polished by bisection on the slope sign.
pub(crate) fn search(stat: &LosStatistic, geom: &ArrayGeometry, grid: &AngleGrid) -> Result<f64> {
    let mut best_k = 0;
    let mut best = f64::NEG_INFINITY;
    let mut max_num = 0.0f64;
    for k in 0..grid.points() {
        let (num, value) = objective(stat, geom, grid.angle(k));
        max_num = max_num.max(num);
        if value > best {
            best = value;
            best_k = k;
        }
    }
    if max_num < DEGENERATE_NUMERATOR {
        return Err(Error::Degenerate(
            "observation is orthogonal to every steered direction".into(),
        ));
    }
    if grid.points() == 1 {
        return Ok(grid.angle(0));
    }
    let lo = grid.angle(best_k.saturating_sub(1));
    let hi = grid.angle((best_k + 1).min(grid.points() - 1));
    let (refined, value) = golden_max(|phi| objective(stat, geom, phi).1, lo, hi, grid.refine_tol());
    let refined = if value >= best { refined } else { grid.angle(best_k) };
    Ok(polish(stat, geom, refined, POLISH_HALF_WIDTH.max(grid.refine_tol())).unwrap_or(refined))
}

// golden-section leaves the peak within about 1e-7 rad
const POLISH_HALF_WIDTH: f64 = 1e-6;

/// `num'·den − num·den'`, which has the sign of the objective's slope.
fn slope(stat: &LosStatistic, geom: &ArrayGeometry, phi: f64) -> f64 {
    let c = column_phase_response(geom, phi);
    let k = 2.0 * std::f64::consts::PI * geom.spacing() * phi.cos();
    let dc = CVector::from_fn(c.len(), |h, _| c[h] * C64::new(0.0, k * h as f64));
    let inner = stat.inner(&c);
    let gc = &stat.gram * &c;
    let num = inner.norm_sqr();
    let d_num = 2.0 * (inner.conj() * stat.inner(&dc)).re;
    let den = c.dotc(&gc).re;
    let d_den = 2.0 * dc.dotc(&gc).re;
    d_num * den - num * d_den
}

/// Bisection on the slope sign around `phi`. Value comparisons cannot
/// separate points this close to a smooth peak, but the slope still can.
fn polish(stat: &LosStatistic, geom: &ArrayGeometry, phi: f64, half_width: f64) -> Option<f64> {
    let mut lo = (phi - half_width).max(-FRAC_PI_2);
    let mut hi = (phi + half_width).min(FRAC_PI_2);
    if !(slope(stat, geom, lo) > 0.0 && slope(stat, geom, hi) < 0.0) {
        return None;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(stat, geom, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let polished = 0.5 * (lo + hi);
    let before = objective(stat, geom, phi).1;
    (objective(stat, geom, polished).1 >= before * (1.0 - 1e-12)).then_some(polished)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization on `[lo, hi]` until the bracket is narrower than `tol`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    (mid, f(mid))
}
