//! Cluster selection and assembly of the correction equation.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::jdsvd::config::Mode;
use crate::jdsvd::ritz::RitzSet;
use crate::operator::{concat, ProjectedAugmentedOp};
use crate::sparse::Oriented;

/// Indices (0-based, ascending) of the Ritz triplets that join the
/// correction equation. Index 0 is always present; index `i ≥ 1` joins when
/// `|θᵢ − τ| ≤ max(θᵢ, 1)·pretol1` and `‖r⁽ⁱ⁾‖ ≤ ‖A‖_e·pretol2`.
pub fn select_cluster(ritz: &RitzSet, tau: f64, pretol1: f64, pretol2: f64, norme: f64) -> Vec<usize> {
    let mut out = vec![0];
    for i in 1..ritz.len() {
        let theta = ritz.theta[i];
        if (theta - tau).abs() <= theta.max(1.0) * pretol1 && ritz.res_norms[i] <= norme * pretol2 {
            out.push(i);
        }
    }
    out
}

/// Relative accuracy `min(ρ·ε̃, 0.1)` demanded of the inner solve.
///
/// `ρ` is the smallest gap between `θ₁` and the other Ritz values relative
/// to `‖A‖_e`, clamped to `[1e-2, 1e2]`; `ρ = 1` when only one Ritz value
/// exists.
pub fn inner_tolerance(theta: &[f64], norme: f64, eps_inner: f64) -> f64 {
    let rho = if theta.len() < 2 || norme == 0.0 {
        1.0
    } else {
        let gap = theta[1..]
            .iter()
            .map(|t| (t - theta[0]).abs())
            .fold(f64::INFINITY, f64::min);
        (gap / norme).clamp(1e-2, 1e2)
    };
    (rho * eps_inner).min(0.1)
}

/// The correction equation `Π B Π [s; t] = r_p` for the current outer step.
#[derive(Debug, Clone)]
pub struct Correction<'a> {
    pub op: ProjectedAugmentedOp<'a>,
    pub rhs: DVector<f64>,
    /// The selection actually used (`[0]` in JDSVD mode).
    pub used: Vec<usize>,
}

/// Builds `U_p = [U_c, Ũ_m̃]`, `V_p = [V_c, Ṽ_m̃]` and
/// `r_p = −diag(I − U_cU_cᵀ, I − V_cV_cᵀ) r⁽¹⁾`.
pub fn assemble_correction<'a>(
    a: Oriented<'a>,
    ritz: &RitzSet,
    selected: &[usize],
    uc: &DMatrix<f64>,
    vc: &DMatrix<f64>,
    tau: f64,
    mode: Mode,
) -> Result<Correction<'a>> {
    assert_eq!(selected.first(), Some(&0), "selection must start with the target triplet");
    let used: Vec<usize> = match mode {
        Mode::Jdsvd => vec![0],
        Mode::Ipjdsvd => selected.to_vec(),
    };
    let up = hcat(uc, &ritz.u.select_columns(&used));
    let vp = hcat(vc, &ritz.v.select_columns(&used));
    let op = ProjectedAugmentedOp::new(a, tau, up, vp)?;

    let mut top = ritz.res_upper.column(0).into_owned();
    let mut bottom = ritz.res_lower.column(0).into_owned();
    project_out(&mut top, uc);
    project_out(&mut bottom, vc);
    let rhs = -concat(&top, &bottom);
    Ok(Correction { op, rhs, used })
}

pub(crate) fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

fn project_out(x: &mut DVector<f64>, q: &DMatrix<f64>) {
    if q.ncols() > 0 {
        let c = q.tr_mul(x);
        *x -= q * c;
    }
}
