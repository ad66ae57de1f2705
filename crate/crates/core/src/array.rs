//! Uniform planar arrays, their response vectors and the reduced subspace a
//! channel observed by an oversampled array must live in.
//!
//! Element `n = row * cols + col` sits at `(0, col·Δ, row·Δ)` meters, i.e. the
//! array occupies a vertical plane with its columns along one horizontal axis.
//! Element `(0, 0)` is the phase reference of every response vector.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, CMatrix, CVector, C64};
use crate::{Error, Result};

/// Geometry of a uniform planar array. `spacing` is in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    rows: usize,
    cols: usize,
    spacing: f64,
    wavelength: f64,
}

impl ArrayGeometry {
    pub fn new(rows: usize, cols: usize, spacing: f64, wavelength: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!(
                "array needs at least one row and column, got {rows}x{cols}"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::invalid(format!("element spacing must be positive, got {spacing}")));
        }
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::invalid(format!("wavelength must be positive, got {wavelength}")));
        }
        Ok(Self {
            rows,
            cols,
            spacing,
            wavelength,
        })
    }

    /// Square `side × side` array.
    pub fn square(side: usize, spacing: f64, wavelength: f64) -> Result<Self> {
        Self::new(side, side, spacing, wavelength)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Element spacing in wavelengths.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn elements(&self) -> usize {
        self.rows * self.cols
    }

    /// Position of element `index` in meters.
    pub fn position(&self, index: usize) -> [f64; 3] {
        let (row, col) = (index / self.cols, index % self.cols);
        let delta = self.spacing * self.wavelength;
        [0.0, col as f64 * delta, row as f64 * delta]
    }
}

/// Azimuth/elevation pair, both in `[-π/2, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringAngles {
    azimuth: f64,
    elevation: f64,
}

impl SteeringAngles {
    pub fn new(azimuth: f64, elevation: f64) -> Result<Self> {
        for (name, v) in [("azimuth", azimuth), ("elevation", elevation)] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite, got {v}")));
            }
            if v.abs() > FRAC_PI_2 {
                return Err(Error::invalid(format!("{name} {v} outside [-pi/2, pi/2]")));
            }
        }
        Ok(Self { azimuth, elevation })
    }

    /// Azimuth-only direction in the horizontal plane.
    pub fn azimuth_only(azimuth: f64) -> Result<Self> {
        Self::new(azimuth, 0.0)
    }

    /// Maps an azimuth outside `[-π/2, π/2]` to the front-side azimuth with the
    /// same response (`sin` is symmetric about ±π/2). Elevation is not folded.
    pub fn folded(azimuth: f64, elevation: f64) -> Result<Self> {
        if !azimuth.is_finite() {
            return Err(Error::invalid(format!("azimuth must be finite, got {azimuth}")));
        }
        let wrapped = (azimuth + PI).rem_euclid(2.0 * PI) - PI;
        let az = if wrapped > FRAC_PI_2 {
            PI - wrapped
        } else if wrapped < -FRAC_PI_2 {
            -PI - wrapped
        } else {
            wrapped
        };
        Self::new(az, elevation)
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn elevation(&self) -> f64 {
        self.elevation
    }
}

/// Array response: entry `(v, h)` is `exp(j·2π·(Δ/λ)·(h·sin φ·cos θ + v·sin θ))`.
pub fn upa_response(geom: &ArrayGeometry, angles: SteeringAngles) -> CVector {
    let k = 2.0 * PI * geom.spacing;
    let (az, el) = (angles.azimuth, angles.elevation);
    let horiz = k * az.sin() * el.cos();
    let vert = k * el.sin();
    CVector::from_fn(geom.elements(), |n, _| {
        let (v, h) = (n / geom.cols, n % geom.cols);
        C64::from_polar(1.0, h as f64 * horiz + v as f64 * vert)
    })
}

/// Like [`upa_response`] but validates raw angles first.
pub fn upa_response_checked(geom: &ArrayGeometry, azimuth: f64, elevation: f64) -> Result<CVector> {
    Ok(upa_response(geom, SteeringAngles::new(azimuth, elevation)?))
}

/// Response towards azimuth `azimuth` at zero elevation.
pub fn azimuth_response(geom: &ArrayGeometry, azimuth: f64) -> CVector {
    let horiz = 2.0 * PI * geom.spacing * azimuth.sin();
    CVector::from_fn(geom.elements(), |n, _| {
        C64::from_polar(1.0, (n % geom.cols) as f64 * horiz)
    })
}

/// The zero-elevation response only varies along columns, so `a(φ) = R·c(φ)`
/// where `R` sums rows. This is `c(φ)`, of length `cols`.
pub fn column_phase_response(geom: &ArrayGeometry, azimuth: f64) -> CVector {
    let horiz = 2.0 * PI * geom.spacing * azimuth.sin();
    CVector::from_fn(geom.cols, |h, _| C64::from_polar(1.0, h as f64 * horiz))
}

/// Computes `X·R` for an `m × elements` matrix `X`: columns sharing a
/// horizontal index are summed.
pub fn fold_columns(geom: &ArrayGeometry, x: &CMatrix) -> CMatrix {
    assert_eq!(x.ncols(), geom.elements(), "fold_columns: width mismatch");
    let mut out = CMatrix::zeros(x.nrows(), geom.cols);
    for n in 0..geom.elements() {
        let h = n % geom.cols;
        let mut dst = out.column_mut(h);
        dst += x.column(n);
    }
    out
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Spatial correlation under isotropic 3-D scattering:
/// `R[m, l] = sinc(2·‖p_m − p_l‖/λ)`.
pub fn isotropic_correlation(geom: &ArrayGeometry) -> CMatrix {
    let n = geom.elements();
    let mut r = CMatrix::zeros(n, n);
    for m in 0..n {
        r[(m, m)] = C64::new(1.0, 0.0);
        let (vm, hm) = ((m / geom.cols) as f64, (m % geom.cols) as f64);
        for l in (m + 1)..n {
            let (vl, hl) = ((l / geom.cols) as f64, (l % geom.cols) as f64);
            // distance in wavelengths
            let dist = geom.spacing * (vm - vl).hypot(hm - hl);
            let value = C64::new(sinc(2.0 * dist), 0.0);
            r[(m, l)] = value;
            r[(l, m)] = value;
        }
    }
    r
}

/// Which eigenvalues of the correlation matrix count as occupied dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ThresholdPolicy {
    /// Keep eigenvalues strictly above `factor × largest`.
    Relative(f64),
    /// Keep eigenvalues strictly above a fixed level.
    Absolute(f64),
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        ThresholdPolicy::Relative(1e-5)
    }
}

impl ThresholdPolicy {
    pub fn cutoff(&self, largest: f64) -> f64 {
        match *self {
            ThresholdPolicy::Relative(f) => f * largest.max(0.0),
            ThresholdPolicy::Absolute(t) => t,
        }
    }
}

/// Semi-unitary basis `U` (elements × rank) with `UᴴU = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: CMatrix,
    retained_eigenvalues: Vec<f64>,
    // orthonormal basis of the orthogonal complement
    complement: CMatrix,
}

/// Tolerance on `‖UᴴU − I‖_max` accepted by [`Subspace::from_basis`].
pub const SEMI_UNITARY_TOL: f64 = 1e-10;

impl Subspace {
    /// Rank-zero subspace of `C^elements`.
    pub fn empty(elements: usize) -> Self {
        Self {
            basis: CMatrix::zeros(elements, 0),
            retained_eigenvalues: Vec::new(),
            complement: CMatrix::identity(elements, elements),
        }
    }

    /// Wraps an explicit basis; its columns must be orthonormal.
    pub fn from_basis(basis: CMatrix) -> Result<Self> {
        if basis.ncols() > basis.nrows() {
            return Err(Error::invalid(format!(
                "basis has rank {} > {} elements",
                basis.ncols(),
                basis.nrows()
            )));
        }
        let defect = semi_unitary_defect(&basis);
        if defect > SEMI_UNITARY_TOL {
            return Err(Error::invalid(format!(
                "basis is not semi-unitary: max |UᴴU - I| = {defect:.3e}"
            )));
        }
        let rank = basis.ncols();
        let complement = complement_basis(&basis)?;
        Ok(Self {
            basis,
            retained_eigenvalues: vec![1.0; rank],
            complement,
        })
    }

    /// Reduced subspace of an array under isotropic scattering.
    pub fn from_geometry(geom: &ArrayGeometry, policy: ThresholdPolicy) -> Result<Self> {
        reduced_subspace(&isotropic_correlation(geom), policy)
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn elements(&self) -> usize {
        self.basis.nrows()
    }

    pub fn retained_eigenvalues(&self) -> &[f64] {
        &self.retained_eigenvalues
    }

    /// `U·Uᴴ`
    pub fn projector(&self) -> CMatrix {
        crate::linalg::projector(&self.basis)
    }

    /// `I − U·Uᴴ`
    pub fn complement_projector(&self) -> CMatrix {
        CMatrix::identity(self.elements(), self.elements()) - self.projector()
    }

    /// Orthonormal basis (elements × (elements − rank)) of the orthogonal complement.
    pub fn complement_basis(&self) -> &CMatrix {
        &self.complement
    }

    /// Coordinates `Uᴴ·v`.
    pub fn coordinates(&self, v: &CVector) -> CVector {
        self.basis.adjoint() * v
    }

    /// `U·x`
    pub fn embed(&self, x: &CVector) -> CVector {
        &self.basis * x
    }

    /// `U·Uᴴ·v`
    pub fn project(&self, v: &CVector) -> CVector {
        self.embed(&self.coordinates(v))
    }
}

fn complement_basis(basis: &CMatrix) -> Result<CMatrix> {
    let n = basis.nrows();
    let k = n - basis.ncols();
    if basis.ncols() == 0 {
        return Ok(CMatrix::identity(n, n));
    }
    // eigenvalues of I − UUᴴ are 1 (multiplicity k) and 0
    let (_, vectors) = hermitian_eigen(&(CMatrix::identity(n, n) - crate::linalg::projector(basis)))?;
    Ok(vectors.columns(0, k).into_owned())
}

pub fn semi_unitary_defect(basis: &CMatrix) -> f64 {
    let gram = basis.adjoint() * basis;
    let eye = CMatrix::identity(gram.nrows(), gram.ncols());
    crate::linalg::max_abs(&(gram - eye))
}

/// Orthonormal eigenvectors of `corr` whose eigenvalues pass `policy`,
/// ordered by descending eigenvalue.
pub fn reduced_subspace(corr: &CMatrix, policy: ThresholdPolicy) -> Result<Subspace> {
    if !corr.is_square() {
        return Err(Error::dims(format!(
            "correlation matrix must be square, got {}x{}",
            corr.nrows(),
            corr.ncols()
        )));
    }
    let scale = crate::linalg::max_abs(corr).max(f64::MIN_POSITIVE);
    let defect = crate::linalg::hermitian_defect(corr);
    if defect > 1e-10 * scale {
        return Err(Error::invalid(format!(
            "correlation matrix is not Hermitian (defect {defect:.3e})"
        )));
    }
    let (values, vectors) = hermitian_eigen(corr)?;
    let largest = values.first().copied().unwrap_or(0.0);
    if let Some(&smallest) = values.last() {
        if smallest < -1e-8 * largest.max(1.0) {
            return Err(Error::invalid(format!(
                "correlation matrix is not positive semidefinite (min eigenvalue {smallest:.3e})"
            )));
        }
    }
    if largest <= 0.0 {
        return Ok(Subspace::empty(corr.nrows()));
    }
    let cutoff = policy.cutoff(largest);
    let rank = values.iter().take_while(|&&v| v > cutoff).count();
    Ok(Subspace {
        basis: vectors.columns(0, rank).into_owned(),
        retained_eigenvalues: values[..rank].to_vec(),
        complement: vectors.columns(rank, corr.nrows() - rank).into_owned(),
    })
}

/// Row-to-column ratio `elements / rank` of a subspace basis.
pub fn subspace_ratio(sub: &Subspace, elements: usize) -> f64 {
    debug_assert!(sub.rank() >= 1, "subspace_ratio of an empty subspace");
    elements as f64 / sub.rank() as f64
}

/// Number of eigenvalues strictly above `tolerance`.
pub fn effective_eigenvalue_count(matrix: &CMatrix, tolerance: f64) -> Result<usize> {
    Ok(hermitian_eigenvalues(matrix)?
        .into_iter()
        .filter(|&v| v > tolerance)
        .count())
}
