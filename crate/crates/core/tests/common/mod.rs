//! Independent reference computations used by the integration tests.
//!
//! Nothing here calls into the decompositions of the crate under test: the
//! eigen oracle is a cyclic Jacobi sweep on a real embedding, least squares
//! goes through normal equations and Gaussian elimination, and the
//! minimizer is a plain Nelder-Mead simplex.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_cmatrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn random_cvector(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Orthonormal columns by modified Gram-Schmidt (twice, for accuracy).
pub fn gram_schmidt(a: &CMatrix) -> CMatrix {
    let mut q = a.clone();
    for _ in 0..2 {
        for j in 0..q.ncols() {
            for i in 0..j {
                let proj = q.column(i).dotc(&q.column(j));
                let qi = q.column(i).into_owned();
                let mut qj = q.column_mut(j);
                qj -= qi * proj;
            }
            let norm = q.column(j).norm();
            let mut qj = q.column_mut(j);
            qj /= C64::new(norm, 0.0);
        }
    }
    q
}

pub fn random_semi_unitary(rng: &mut ChaCha8Rng, rows: usize, rank: usize) -> CMatrix {
    gram_schmidt(&random_cmatrix(rng, rows, rank))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() < 1e-15 * (1.0 + a.norm()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

/// Eigenvalues of a Hermitian matrix through the real embedding
/// `[[Re, −Im], [Im, Re]]`, whose spectrum repeats each eigenvalue twice.
pub fn hermitian_eigenvalues_oracle(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    let mut real = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            real[(i, j)] = z.re;
            real[(i + n, j + n)] = z.re;
            real[(i, j + n)] = -z.im;
            real[(i + n, j)] = z.im;
        }
    }
    jacobi_eigenvalues(real).into_iter().step_by(2).collect()
}

/// Solves a square complex system by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: CMatrix, mut b: CVector) -> CVector {
    let n = a.nrows();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[(i, col)].norm().partial_cmp(&a[(j, col)].norm()).unwrap()).unwrap();
        a.swap_rows(col, pivot);
        b.swap_rows(col, pivot);
        for row in (col + 1)..n {
            let factor = a[(row, col)] / a[(col, col)];
            for k in col..n {
                let v = a[(col, k)];
                a[(row, k)] -= factor * v;
            }
            let v = b[col];
            b[row] -= factor * v;
        }
    }
    let mut x = CVector::zeros(n);
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[(row, k)] * x[k];
        }
        x[row] = acc / a[(row, row)];
    }
    x
}

/// Least squares `argmin ‖A·x − b‖` for full-column-rank `A` via the normal
/// equations `AᴴA·x = Aᴴb`.
pub fn least_squares_normal(a: &CMatrix, b: &CVector) -> CVector {
    gauss_solve(a.adjoint() * a, a.adjoint() * b)
}

/// Nelder-Mead minimization over `R^n`.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, iterations: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    for _ in 0..iterations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let centroid: Vec<f64> = (0..n).map(|k| simplex[..n].iter().map(|x| x[k]).sum::<f64>() / n as f64).collect();
        let towards = |t: f64| -> Vec<f64> { (0..n).map(|k| centroid[k] + t * (simplex[n][k] - centroid[k])).collect() };

        let reflected = towards(-1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = towards(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            let contracted = if fr < values[n] { towards(-0.5) } else { towards(0.5) };
            let fc = f(&contracted);
            if fc < values[n].min(fr) {
                simplex[n] = contracted;
                values[n] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=n {
                    simplex[i] = (0..n).map(|k| best[k] + 0.5 * (simplex[i][k] - best[k])).collect();
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap()).unwrap();
    (simplex[best].clone(), values[best])
}

/// Response of a row-major `rows × cols` array at zero elevation, written
/// out directly from the phase model.
pub fn steering(rows: usize, cols: usize, spacing: f64, azimuth: f64) -> CVector {
    CVector::from_fn(rows * cols, |n, _| {
        let h = (n % cols) as f64;
        C64::from_polar(1.0, 2.0 * std::f64::consts::PI * spacing * h * azimuth.sin())
    })
}

/// Minimum over `(c, x_g, x_d)` of `Σ_s ‖y[s] − √P·(U_d·x_d[s] + H̄[s]·(c·a + U_g·x_g[s]))‖²`
/// at a fixed azimuth, as one joint linear least-squares problem.
pub fn profiled_objective(
    y: &[CVector],
    hbar: &[CMatrix],
    ud: &CMatrix,
    ug: &CMatrix,
    a: &CVector,
    power: f64,
) -> f64 {
    let s_count = y.len();
    let m = ud.nrows();
    let (rd, rg) = (ud.ncols(), ug.ncols());
    let unknowns = 1 + s_count * (rg + rd);
    let sqrt_p = C64::new(power.sqrt(), 0.0);
    let mut design = CMatrix::zeros(m * s_count, unknowns);
    let mut rhs = CVector::zeros(m * s_count);
    for s in 0..s_count {
        let rows = s * m;
        let ha = &hbar[s] * a * sqrt_p;
        design.view_mut((rows, 0), (m, 1)).copy_from(&ha);
        let hug = &hbar[s] * ug * sqrt_p;
        design.view_mut((rows, 1 + s * rg), (m, rg)).copy_from(&hug);
        let udp = ud * sqrt_p;
        design.view_mut((rows, 1 + s_count * rg + s * rd), (m, rd)).copy_from(&udp);
        rhs.rows_mut(rows, m).copy_from(&y[s]);
    }
    let x = least_squares_normal(&design, &rhs);
    (&design * x - rhs).norm_squared()
}

/// A small random instance of the pilot model with explicit subspaces.
pub struct Instance {
    pub geom_ris: ris_mle::array::ArrayGeometry,
    pub h: Vec<CMatrix>,
    pub ris: ris_mle::channel::RisConfiguration,
    pub ud: CMatrix,
    pub ug: CMatrix,
    pub beta: f64,
    pub phase: f64,
    pub aoa: f64,
    pub xg: Vec<CVector>,
    pub xd: Vec<CVector>,
    pub power: f64,
}

impl Instance {
    /// `m` BS elements, a `ris_rows × ris_cols` quarter-wavelength RIS,
    /// Gaussian `H[s]` and random orthonormal subspaces of ranks `rd`, `rg`.
    pub fn random(
        rng: &mut ChaCha8Rng,
        m: usize,
        ris_rows: usize,
        ris_cols: usize,
        subcarriers: usize,
        rd: usize,
        rg: usize,
    ) -> Self {
        let n = ris_rows * ris_cols;
        let geom_ris = ris_mle::array::ArrayGeometry::new(ris_rows, ris_cols, 0.25, 0.1).unwrap();
        let h = (0..subcarriers).map(|_| random_cmatrix(rng, m, n)).collect();
        let ris = ris_mle::channel::RisConfiguration::new(
            (0..n).map(|_| rng.random_range(0.0..2.0 * std::f64::consts::PI)).collect(),
        )
        .unwrap();
        let xg = (0..subcarriers).map(|_| random_cvector(rng, rg)).collect();
        let xd = (0..subcarriers).map(|_| random_cvector(rng, rd)).collect();
        Self {
            geom_ris,
            h,
            ris,
            ud: random_semi_unitary(rng, m, rd),
            ug: random_semi_unitary(rng, n, rg),
            beta: rng.random_range(0.5..2.0),
            phase: rng.random_range(-3.0..3.0),
            aoa: rng.random_range(-1.2..1.2),
            xg,
            xd,
            power: rng.random_range(0.5..4.0),
        }
    }

    pub fn subcarriers(&self) -> usize {
        self.h.len()
    }

    pub fn m(&self) -> usize {
        self.h[0].nrows()
    }

    pub fn steering(&self, aoa: f64) -> CVector {
        steering(self.geom_ris.rows(), self.geom_ris.cols(), 0.25, aoa)
    }

    pub fn hbar(&self, s: usize) -> CMatrix {
        let mut hbar = self.h[s].clone();
        for (j, &t) in self.ris.phases().iter().enumerate() {
            let mut col = hbar.column_mut(j);
            col *= C64::from_polar(1.0, t);
        }
        hbar
    }

    pub fn amplitude(&self) -> C64 {
        C64::from_polar(self.beta.sqrt(), self.phase)
    }

    pub fn g(&self, s: usize) -> CVector {
        self.steering(self.aoa) * self.amplitude() + &self.ug * &self.xg[s]
    }

    pub fn d(&self, s: usize) -> CVector {
        &self.ud * &self.xd[s]
    }

    /// `(I − U_d·U_dᴴ)·H̄[s]·U_g`
    pub fn ag(&self, s: usize) -> CMatrix {
        let m = self.m();
        (CMatrix::identity(m, m) - &self.ud * self.ud.adjoint()) * self.hbar(s) * &self.ug
    }

    /// `I − Q·Qᴴ` with `Q` an orthonormal basis of `[U_d, A_g[s]]`.
    pub fn abar(&self, s: usize) -> CMatrix {
        let m = self.m();
        let ag = self.ag(s);
        let mut joint = CMatrix::zeros(m, self.ud.ncols() + ag.ncols());
        joint.columns_mut(0, self.ud.ncols()).copy_from(&self.ud);
        joint.columns_mut(self.ud.ncols(), ag.ncols()).copy_from(&ag);
        let q = gram_schmidt(&joint);
        CMatrix::identity(m, m) - &q * q.adjoint()
    }

    pub fn noiseless(&self) -> Vec<CVector> {
        let sqrt_p = C64::new(self.power.sqrt(), 0.0);
        (0..self.subcarriers())
            .map(|s| (self.d(s) + self.hbar(s) * self.g(s)) * sqrt_p)
            .collect()
    }

    pub fn observation(&self, noise_var: f64, rng: &mut ChaCha8Rng) -> ris_mle::channel::PilotObservation {
        let mut y = self.noiseless();
        for ys in &mut y {
            for z in ys.iter_mut() {
                *z += ris_mle::channel::complex_gaussian(rng, noise_var);
            }
        }
        ris_mle::channel::PilotObservation {
            y,
            power: self.power,
            noise_var,
            ris: self.ris.clone(),
        }
    }

    pub fn subspaces(&self) -> (ris_mle::array::Subspace, ris_mle::array::Subspace) {
        let sub = |b: &CMatrix| {
            if b.ncols() == 0 {
                ris_mle::array::Subspace::empty(b.nrows())
            } else {
                ris_mle::array::Subspace::from_basis(b.clone()).unwrap()
            }
        };
        (sub(&self.ud), sub(&self.ug))
    }

    pub fn workspace(&self) -> ris_mle::estimator::EstimatorWorkspace {
        let (ud, ug) = self.subspaces();
        ris_mle::estimator::EstimatorWorkspace::build(&self.h, &self.ris, &self.geom_ris, &ud, &ug).unwrap()
    }

    pub fn identity_workspace(&self) -> ris_mle::estimator::EstimatorWorkspace {
        ris_mle::estimator::EstimatorWorkspace::identity(&self.h, &self.ris, &self.geom_ris).unwrap()
    }

    /// `(Σ_s H̄ᴴ·Ā·y, Σ_s H̄ᴴ·Ā·H̄)` from the oracle `Ā[s]`.
    pub fn los_statistic(&self, y: &[CVector]) -> (CVector, CMatrix) {
        let n = self.geom_ris.elements();
        let mut w = CVector::zeros(n);
        let mut gram = CMatrix::zeros(n, n);
        for s in 0..self.subcarriers() {
            let hbar = self.hbar(s);
            let abar = self.abar(s);
            w += hbar.adjoint() * (&abar * &y[s]);
            gram += hbar.adjoint() * &abar * &hbar;
        }
        (w, gram)
    }
}

/// `|Σ_s yᴴ·Ā·H̄·a|² / Σ_s aᴴ·H̄ᴴ·Ā·H̄·a` from a precomputed statistic.
pub fn aoa_objective(w: &CVector, gram: &CMatrix, a: &CVector) -> f64 {
    w.dotc(a).norm_sqr() / a.dotc(&(gram * a)).re
}

/// Maximizer of [`aoa_objective`] over a uniform grid on `[−π/2, π/2]`.
pub fn dense_aoa_oracle(inst: &Instance, y: &[CVector], points: usize) -> f64 {
    let (w, gram) = inst.los_statistic(y);
    let mut best = (f64::MIN, 0.0);
    for k in 0..points {
        let phi = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * k as f64 / (points - 1) as f64;
        let v = aoa_objective(&w, &gram, &inst.steering(phi));
        if v > best.0 {
            best = (v, phi);
        }
    }
    best.1
}
