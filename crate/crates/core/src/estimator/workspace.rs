use crate::array::{fold_columns, ArrayGeometry, Subspace};
use crate::channel::RisConfiguration;
use crate::linalg::{max_abs, projector, CMatrix, CVector, CompactSvd, C64};
use crate::{Error, Result};

/// Singular values at or below this fraction of the largest are dropped from
/// the compact SVD of `A_g[s]`.
pub const DEFAULT_SVD_REL_TOL: f64 = 1e-10;

/// Tolerance on `‖U_dᴴ·U_A[s]‖_max` before `Ā[s]` is flagged.
const ORTHOGONALITY_TOL: f64 = 1e-9;

/// Per-subcarrier quantities that depend only on `H[s]`, `Φ` and the
/// subspaces, so they can be reused for any observation.
///
/// `A_g[s] = (I − U_d·U_dᴴ)·H̄[s]·U_g` with compact SVD `U_A·Σ_A·V_Aᴴ`, and
/// `Ā[s] = I − U_d·U_dᴴ − U_A[s]·U_A[s]ᴴ`.
#[derive(Debug, Clone)]
pub struct EstimatorWorkspace {
    geom_ris: ArrayGeometry,
    ud: Subspace,
    ug: Subspace,
    hbar: Vec<CMatrix>,
    // orthonormal basis of range(I − U_d·U_dᴴ)
    complement: CMatrix,
    // U_⊥ᴴ·H̄[s]·U_g, so that A_g[s] = U_⊥·reduced[s]
    reduced: Vec<CMatrix>,
    // left singular vectors of reduced[s]; U_A[s] = U_⊥·reduced_u[s]
    reduced_u: Vec<CMatrix>,
    svd: Vec<CompactSvd>,
    // Ā[s]·H̄[s]·R, where R sums RIS rows (zero-elevation responses only vary per column)
    abar_hbar_folded: Vec<CMatrix>,
    // (H̄[s]·R)ᴴ·Ā[s]·(H̄[s]·R)
    gram_folded: Vec<CMatrix>,
    psd_warning: bool,
    blind_subcarriers: usize,
}

impl EstimatorWorkspace {
    pub fn build(
        h: &[CMatrix],
        ris: &RisConfiguration,
        geom_ris: &ArrayGeometry,
        ud: &Subspace,
        ug: &Subspace,
    ) -> Result<Self> {
        Self::build_with_tol(h, ris, geom_ris, ud, ug, DEFAULT_SVD_REL_TOL)
    }

    pub fn build_with_tol(
        h: &[CMatrix],
        ris: &RisConfiguration,
        geom_ris: &ArrayGeometry,
        ud: &Subspace,
        ug: &Subspace,
        svd_rel_tol: f64,
    ) -> Result<Self> {
        let first = h.first().ok_or_else(|| Error::invalid("at least one subcarrier is required"))?;
        let (m, n) = first.shape();
        if h.iter().any(|hs| hs.shape() != (m, n)) {
            return Err(Error::dims("H[s] must have the same shape on every subcarrier"));
        }
        if geom_ris.elements() != n || ug.elements() != n {
            return Err(Error::dims(format!(
                "H has {n} columns; RIS geometry has {} elements and U_g {} rows",
                geom_ris.elements(),
                ug.elements()
            )));
        }
        if ud.elements() != m {
            return Err(Error::dims(format!("H has {m} rows but U_d has {}", ud.elements())));
        }

        let comp = ud.complement_basis();
        let mut out = Self {
            geom_ris: *geom_ris,
            ud: ud.clone(),
            ug: ug.clone(),
            hbar: Vec::with_capacity(h.len()),
            complement: comp.clone(),
            reduced: Vec::with_capacity(h.len()),
            reduced_u: Vec::with_capacity(h.len()),
            svd: Vec::with_capacity(h.len()),
            abar_hbar_folded: Vec::with_capacity(h.len()),
            gram_folded: Vec::with_capacity(h.len()),
            psd_warning: false,
            blind_subcarriers: 0,
        };
        for hs in h {
            let hbar = ris.apply(hs)?;
            // work in complement coordinates so U_A ⟂ U_d holds to machine precision
            let reduced = comp.adjoint() * (&hbar * ug.basis());
            let inner = CompactSvd::new(&reduced, svd_rel_tol)?;
            let svd = CompactSvd {
                u: comp * &inner.u,
                singular_values: inner.singular_values.clone(),
                v: inner.v.clone(),
            };

            if ud.rank() > 0 && svd.rank() > 0 {
                let leak = max_abs(&(ud.basis().adjoint() * &svd.u));
                if leak > ORTHOGONALITY_TOL {
                    out.psd_warning = true;
                }
            }
            if m <= ud.rank() + svd.rank() {
                out.blind_subcarriers += 1;
            }

            let hbar_r = fold_columns(geom_ris, &hbar);
            let c = comp.adjoint() * &hbar_r;
            let e = &c - &inner.u * (inner.u.adjoint() * &c);
            let abar_hbar_r = comp * &e;
            let gram = e.adjoint() * &e;
            out.hbar.push(hbar);
            out.reduced.push(reduced);
            out.reduced_u.push(inner.u);
            out.svd.push(svd);
            out.abar_hbar_folded.push(abar_hbar_r);
            out.gram_folded.push(gram);
        }
        Ok(out)
    }

    /// Workspace with `Ā[s] = I`: no NLOS subspaces are modelled.
    pub fn identity(h: &[CMatrix], ris: &RisConfiguration, geom_ris: &ArrayGeometry) -> Result<Self> {
        let m = h.first().map_or(0, |hs| hs.nrows());
        Self::build(h, ris, geom_ris, &Subspace::empty(m), &Subspace::empty(geom_ris.elements()))
    }

    pub fn is_identity(&self) -> bool {
        self.ud.rank() == 0 && self.ug.rank() == 0
    }

    pub fn subcarriers(&self) -> usize {
        self.hbar.len()
    }

    pub fn bs_elements(&self) -> usize {
        self.ud.elements()
    }

    pub fn geom_ris(&self) -> &ArrayGeometry {
        &self.geom_ris
    }

    pub fn ud(&self) -> &Subspace {
        &self.ud
    }

    pub fn ug(&self) -> &Subspace {
        &self.ug
    }

    /// `H̄[s] = H[s]·Φ`
    pub fn hbar(&self) -> &[CMatrix] {
        &self.hbar
    }

    /// `A_g[s] = (I − U_d·U_dᴴ)·H̄[s]·U_g`, formed on demand.
    pub fn ag(&self) -> Vec<CMatrix> {
        self.reduced.iter().map(|r| &self.complement * r).collect()
    }

    pub fn svd(&self) -> &[CompactSvd] {
        &self.svd
    }

    pub fn ua(&self, s: usize) -> &CMatrix {
        &self.svd[s].u
    }

    /// `Ā[s] = I − U_d·U_dᴴ − U_A[s]·U_A[s]ᴴ`, formed on demand.
    pub fn abar(&self) -> Vec<CMatrix> {
        let k = self.complement.ncols();
        self.reduced_u
            .iter()
            .map(|u| {
                let keep = CMatrix::identity(k, k) - projector(u);
                &self.complement * keep * self.complement.adjoint()
            })
            .collect()
    }

    /// True when some `U_A[s]` leaked into the span of `U_d`, in which case
    /// `Ā[s]` is not an orthogonal projector and need not be PSD.
    pub fn psd_warning(&self) -> bool {
        self.psd_warning
    }

    /// Subcarriers where `Ā[s]` has no room left (`M ≤ r_d + rank A_g[s]`):
    /// the BS array is too small to see the LOS term there.
    pub fn blind_subcarriers(&self) -> usize {
        self.blind_subcarriers
    }

    /// Sufficient statistic of the LOS sub-problem over the given subcarriers.
    pub(crate) fn los_statistic(&self, y: &[CVector], subcarriers: impl IntoIterator<Item = usize>) -> LosStatistic {
        let cols = self.geom_ris.cols();
        let mut stat = LosStatistic {
            b: CVector::zeros(cols),
            gram: CMatrix::zeros(cols, cols),
        };
        for s in subcarriers {
            stat.b += self.abar_hbar_folded[s].adjoint() * &y[s];
            stat.gram += &self.gram_folded[s];
        }
        stat
    }

    pub(crate) fn check_observation(&self, y: &[CVector]) -> Result<()> {
        if y.len() != self.subcarriers() {
            return Err(Error::dims(format!(
                "observation has {} subcarriers, workspace {}",
                y.len(),
                self.subcarriers()
            )));
        }
        let m = self.bs_elements();
        if let Some((s, v)) = y.iter().enumerate().find(|(_, v)| v.len() != m) {
            return Err(Error::dims(format!("y[{s}] has {} entries, expected {m}", v.len())));
        }
        Ok(())
    }
}

/// `b = Σ_s (Ā[s]·H̄[s]·R)ᴴ·y[s]` and `G = Σ_s (H̄[s]·R)ᴴ·Ā[s]·(H̄[s]·R)`, so that
/// `Σ_s yᴴ·Ā·H̄·a(φ) = bᴴ·c(φ)` and `Σ_s aᴴ·H̄ᴴ·Ā·H̄·a = cᴴ·G·c` with `a = R·c`.
#[derive(Debug, Clone)]
pub(crate) struct LosStatistic {
    pub b: CVector,
    pub gram: CMatrix,
}

impl LosStatistic {
    pub fn inner(&self, c: &CVector) -> C64 {
        self.b.dotc(c)
    }

    pub fn energy(&self, c: &CVector) -> f64 {
        c.dotc(&(&self.gram * c)).re
    }
}
