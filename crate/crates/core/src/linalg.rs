//! Thin wrappers over the dense complex factorizations used throughout the crate.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
pub use num_complex::Complex64 as C64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

const EIGEN_EPS: f64 = 1e-15;
const MAX_SWEEPS: usize = 10_000;

/// Largest absolute entry of a complex matrix.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermitian_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Orthogonal projector `U·Uᴴ`.
pub fn projector(basis: &CMatrix) -> CMatrix {
    basis * basis.adjoint()
}

/// Eigen-decomposition of a Hermitian matrix, eigenpairs sorted by
/// descending eigenvalue.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !m.is_square() {
        return Err(Error::dims(format!(
            "eigendecomposition of non-square {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    // Symmetrize so tiny rounding asymmetries do not leak into the result.
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::try_new(sym, EIGEN_EPS, MAX_SWEEPS).ok_or_else(|| Error::Numeric {
        operation: "hermitian eigendecomposition",
        detail: condition_report(m),
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    hermitian_eigen(m).map(|(v, _)| v)
}

fn condition_report(m: &CMatrix) -> String {
    let frob = m.norm();
    let diag_max = (0..m.nrows().min(m.ncols()))
        .map(|i| m[(i, i)].norm())
        .fold(0.0, f64::max);
    let finite = m.iter().all(|z| z.re.is_finite() && z.im.is_finite());
    format!(
        "{}x{} matrix, frobenius norm {frob:.3e}, max |diag| {diag_max:.3e}, hermitian defect {:.3e}, all finite: {finite}",
        m.nrows(),
        m.ncols(),
        hermitian_defect(m),
    )
}

/// Compact SVD `A = U·diag(σ)·Vᴴ` keeping only singular values above
/// `rel_tol` times the largest one.
#[derive(Debug, Clone)]
pub struct CompactSvd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
}

impl CompactSvd {
    pub fn new(a: &CMatrix, rel_tol: f64) -> Result<Self> {
        let (rows, cols) = a.shape();
        if rows == 0 || cols == 0 || a.iter().all(|z| *z == C64::new(0.0, 0.0)) {
            return Ok(Self::empty(rows, cols));
        }
        let svd = SVD::try_new(a.clone(), true, true, EIGEN_EPS, MAX_SWEEPS).ok_or_else(|| {
            Error::Numeric {
                operation: "compact SVD",
                detail: condition_report(a),
            }
        })?;
        let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
            return Err(Error::Numeric {
                operation: "compact SVD",
                detail: "factor matrices were not produced".into(),
            });
        };
        let k = svd.singular_values.len();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
        let largest = svd.singular_values[order[0]];
        let kept: Vec<usize> = order
            .into_iter()
            .filter(|&i| svd.singular_values[i] > rel_tol * largest)
            .collect();
        let u_c = CMatrix::from_fn(rows, kept.len(), |r, c| u[(r, kept[c])]);
        let v_c = CMatrix::from_fn(cols, kept.len(), |r, c| v_t[(kept[c], r)].conj());
        let singular_values = kept.iter().map(|&i| svd.singular_values[i]).collect();
        Ok(Self {
            u: u_c,
            singular_values,
            v: v_c,
        })
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            u: CMatrix::zeros(rows, 0),
            singular_values: Vec::new(),
            v: CMatrix::zeros(cols, 0),
        }
    }

    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// Minimum-norm least-squares solution `V·Σ⁻¹·Uᴴ·b`.
    pub fn solve(&self, b: &CVector) -> CVector {
        let mut coeffs = self.u.adjoint() * b;
        for (c, s) in coeffs.iter_mut().zip(&self.singular_values) {
            *c /= *s;
        }
        &self.v * coeffs
    }
}
