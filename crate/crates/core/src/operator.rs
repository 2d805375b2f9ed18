//! The symmetric operator of the (preconditioned, deflated) correction equation.
//!
//! For a shift `τ` and orthonormal blocks `U_p`, `V_p` the operator is
//!
//! ```text
//! Π · [[-τI, A], [Aᵀ, -τI]] · Π,   Π = diag(I - U_p U_pᵀ, I - V_p V_pᵀ)
//! ```
//!
//! acting on vectors of length `M + N`. It is never formed; each application
//! costs one product with `A` and one with `Aᵀ`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dense::orthonormality_defect;
use crate::error::{Error, Result};
use crate::sparse::{Oriented, SparseMatrix};

/// Orthonormality deviation above which a projector block is rejected.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// Default limit on `M + N` for dense assembly.
pub const DEFAULT_AUDIT_CAP: usize = 400;

/// A symmetric linear map on `ℝⁿ`, as consumed by [`crate::minres`].
pub trait SymmetricOperator {
    fn dim(&self) -> usize;

    /// `y = Op x`. `x.len()` must equal [`dim`](Self::dim).
    fn apply_to(&self, x: &DVector<f64>) -> DVector<f64>;
}

impl SymmetricOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply_to(&self, x: &DVector<f64>) -> DVector<f64> {
        self * x
    }
}

#[derive(Debug, Clone)]
pub struct ProjectedAugmentedOp<'a> {
    a: Oriented<'a>,
    tau: f64,
    up: DMatrix<f64>,
    vp: DMatrix<f64>,
}

/// Builds the projected operator for `A` in its stored orientation.
pub fn make_projected_op<'a>(
    a: &'a SparseMatrix,
    tau: f64,
    up: DMatrix<f64>,
    vp: DMatrix<f64>,
) -> Result<ProjectedAugmentedOp<'a>> {
    ProjectedAugmentedOp::new(a.as_oriented(), tau, up, vp)
}

impl<'a> ProjectedAugmentedOp<'a> {
    pub fn new(a: Oriented<'a>, tau: f64, up: DMatrix<f64>, vp: DMatrix<f64>) -> Result<Self> {
        let (m, n) = (a.nrows(), a.ncols());
        if up.nrows() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: up.nrows(),
            });
        }
        if vp.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: vp.nrows(),
            });
        }
        if up.ncols() != vp.ncols() {
            return Err(Error::DimensionMismatch {
                expected: up.ncols(),
                found: vp.ncols(),
            });
        }
        if !tau.is_finite() {
            return Err(Error::NonFinite("shift"));
        }
        let deviation = orthonormality_defect(&up).max(orthonormality_defect(&vp));
        if deviation > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(Self { a, tau, up, vp })
    }

    /// The unprojected augmented operator `B`.
    pub fn unprojected(a: Oriented<'a>, tau: f64) -> Result<Self> {
        let (m, n) = (a.nrows(), a.ncols());
        Self::new(a, tau, DMatrix::zeros(m, 0), DMatrix::zeros(n, 0))
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn left_block(&self) -> &DMatrix<f64> {
        &self.up
    }

    pub fn right_block(&self) -> &DMatrix<f64> {
        &self.vp
    }

    pub fn projected_count(&self) -> usize {
        self.up.ncols()
    }

    pub fn matrix(&self) -> Oriented<'a> {
        self.a
    }

    fn m(&self) -> usize {
        self.a.nrows()
    }

    /// `Π w`, without touching `A`.
    pub fn project(&self, w: &DVector<f64>) -> DVector<f64> {
        let m = self.m();
        let mut out = w.clone();
        project_block(&mut out.rows_mut(0, m), &self.up);
        let n = w.len() - m;
        project_block(&mut out.rows_mut(m, n), &self.vp);
        out
    }

    /// `Π B Π w`. Consumes one product with `A` and one with `Aᵀ`.
    pub fn apply_op(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        let dim = self.m() + self.a.ncols();
        if w.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: w.len(),
            });
        }
        Ok(self.apply_unchecked(w))
    }

    fn apply_unchecked(&self, w: &DVector<f64>) -> DVector<f64> {
        let (m, n) = (self.m(), self.a.ncols());
        let pw = self.project(w);
        let x = pw.rows(0, m);
        let y = pw.rows(m, n);
        let mut out = DVector::zeros(m + n);
        self.a.apply_into(y.as_slice(), out.rows_mut(0, m).as_mut_slice());
        self.a
            .apply_transpose_into(x.as_slice(), out.rows_mut(m, n).as_mut_slice());
        for i in 0..m + n {
            out[i] -= self.tau * pw[i];
        }
        project_block(&mut out.rows_mut(0, m), &self.up);
        project_block(&mut out.rows_mut(m, n), &self.vp);
        out
    }
}

impl SymmetricOperator for ProjectedAugmentedOp<'_> {
    fn dim(&self) -> usize {
        self.a.nrows() + self.a.ncols()
    }

    fn apply_to(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.dim(), "operator dimension mismatch");
        self.apply_unchecked(x)
    }
}

fn project_block(x: &mut nalgebra::DVectorViewMut<'_, f64>, q: &DMatrix<f64>) {
    if q.ncols() == 0 {
        return;
    }
    let coeffs = q.tr_mul(&*x);
    *x -= q * coeffs;
}

/// Dense reduced form `B′ = W̃ᵀ B W̃` together with the basis
/// `W̃ = diag(P̃, Q̃)` of the complement of `diag(U_p, V_p)`.
#[derive(Debug, Clone)]
pub struct ReducedOperator {
    pub matrix: DMatrix<f64>,
    /// `M × (M − p)`, completes `U_p` to an orthogonal matrix.
    pub left_complement: DMatrix<f64>,
    /// `N × (N − p)`, completes `V_p` to an orthogonal matrix.
    pub right_complement: DMatrix<f64>,
}

impl ReducedOperator {
    /// `W̃ᵀ w`.
    pub fn restrict(&self, w: &DVector<f64>) -> DVector<f64> {
        let m = self.left_complement.nrows();
        let n = self.right_complement.nrows();
        let top = self.left_complement.tr_mul(&w.rows(0, m));
        let bottom = self.right_complement.tr_mul(&w.rows(m, n));
        concat(&top, &bottom)
    }

    /// `W̃ z`.
    pub fn extend(&self, z: &DVector<f64>) -> DVector<f64> {
        let mp = self.left_complement.ncols();
        let np = self.right_complement.ncols();
        let top = &self.left_complement * z.rows(0, mp);
        let bottom = &self.right_complement * z.rows(mp, np);
        concat(&top, &bottom)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

pub(crate) fn concat(top: &DVector<f64>, bottom: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(top.len() + bottom.len());
    out.rows_mut(0, top.len()).copy_from(top);
    out.rows_mut(top.len(), bottom.len()).copy_from(bottom);
    out
}

/// Assembles the reduced matrix `B′` densely. Only for audit-scale problems.
pub fn assemble_reduced_op(op: &ProjectedAugmentedOp<'_>, cap: usize) -> Result<ReducedOperator> {
    assemble_reduced_op_seeded(op, cap, 0x5eed)
}

/// As [`assemble_reduced_op`] with an explicit seed for the random completion.
pub fn assemble_reduced_op_seeded(
    op: &ProjectedAugmentedOp<'_>,
    cap: usize,
    seed: u64,
) -> Result<ReducedOperator> {
    let dim = op.dim();
    if dim > cap {
        return Err(Error::AuditCapExceeded { dim, cap });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p_tilde = complete_basis(&op.up, &mut rng)?;
    let q_tilde = complete_basis(&op.vp, &mut rng)?;
    let a = op.a.to_dense();
    let coupling = p_tilde.transpose() * &a * &q_tilde;
    let (mp, np) = (p_tilde.ncols(), q_tilde.ncols());
    let mut b = DMatrix::zeros(mp + np, mp + np);
    for i in 0..mp {
        b[(i, i)] = -op.tau;
    }
    for i in 0..np {
        b[(mp + i, mp + i)] = -op.tau;
    }
    b.view_mut((0, mp), (mp, np)).copy_from(&coupling);
    b.view_mut((mp, 0), (np, mp)).copy_from(&coupling.transpose());
    Ok(ReducedOperator {
        matrix: b,
        left_complement: p_tilde,
        right_complement: q_tilde,
    })
}

/// Orthonormal basis of the orthogonal complement of `range(q)`.
pub fn complete_basis(q: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> Result<DMatrix<f64>> {
    let (n, p) = q.shape();
    if p > n {
        return Err(Error::RankDeficient);
    }
    if p == n {
        return Ok(DMatrix::zeros(n, 0));
    }
    let mut full = DMatrix::zeros(n, n);
    full.view_mut((0, 0), (n, p)).copy_from(q);
    for j in p..n {
        for i in 0..n {
            full[(i, j)] = StandardNormal.sample(rng);
        }
    }
    let qf = full.qr().q();
    let mut comp = qf.columns(p, n - p).into_owned();
    // one more projection pass keeps the complement orthogonal to q at 1e-15
    if p > 0 {
        let c = q.tr_mul(&comp);
        comp -= q * c;
        for j in 0..comp.ncols() {
            let nrm = comp.column(j).norm();
            comp.column_mut(j).scale_mut(1.0 / nrm);
        }
    }
    Ok(comp)
}
