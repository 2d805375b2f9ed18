//! The thick-restart outer iteration with deflation and purgation.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jdsvd::config::SolverConfig;
use crate::jdsvd::correction::{assemble_correction, hcat, inner_tolerance, select_cluster};
use crate::jdsvd::restart::{purge, thick_restart};
use crate::jdsvd::ritz::{check_convergence, extract_ritz};
use crate::jdsvd::subspace::{orthonormal_or_random, SubspacePair};
use crate::minres::{default_maxit, Minres, MinresStatus};
use crate::sparse::{Oriented, SparseMatrix};

/// Largest relative tolerance handed to MINRES. The inner test compares
/// against `‖r⁽¹⁾‖`, which may slightly exceed `‖r_p‖`.
const MAX_MINRES_RTOL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    /// The cap on correction-equation solves was hit.
    MaxOuter,
    /// The residual could not be driven below the tolerance even though the
    /// searching subspace already spans the whole deflated space.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct ConvergedTriplet {
    pub value: f64,
    pub left: DVector<f64>,
    pub right: DVector<f64>,
    /// `‖r‖` recomputed with fresh products at deflation time.
    pub residual: f64,
    /// Correction-equation solves completed when the triplet converged.
    pub outer_iteration: usize,
    /// Inner iterations of each solve spent on this triplet.
    pub inner_iterations: Vec<usize>,
}

/// One correction-equation solve.
#[derive(Debug, Clone, Serialize)]
pub struct OuterStep {
    pub iteration: usize,
    /// Subspace dimension at extraction.
    pub k: usize,
    pub theta1: f64,
    pub rnorm1: f64,
    /// Number of Ritz triplets in the correction projector (`m̃`).
    pub m_tilde: usize,
    pub rtol: f64,
    pub inner_iterations: usize,
    pub op_applications: usize,
    pub inner_status: MinresStatus,
    /// Dimension right after a thick restart, if one happened.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restart_k: Option<usize>,
    /// Dimension after expansion.
    pub k_after: usize,
    /// `‖ŨᵀU_c‖_F` at extraction.
    pub defl_defect_u: f64,
    /// `‖ṼᵀV_c‖_F` at extraction.
    pub defl_defect_v: f64,
    /// Matrix-handle tally after this step.
    pub mv_tally: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeflationEvent {
    pub index: usize,
    pub value: f64,
    pub residual: f64,
    pub k_before: usize,
    pub k_after: usize,
    pub mv_before_purge: u64,
    pub mv_after_purge: u64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub triplets: Vec<ConvergedTriplet>,
    /// Correction equations solved.
    pub outer_iterations: usize,
    /// Products with `A` and `Aᵀ` consumed by the solve.
    pub mvs: u64,
    /// Subspace expansions, including initial and post-purge ones.
    pub expansions: usize,
    /// Products spent outside expansions and inner solves: residual
    /// verification at deflation and subspace refreshes.
    pub auxiliary_products: u64,
    pub trace: Vec<OuterStep>,
    pub deflations: Vec<DeflationEvent>,
    pub termination: Termination,
    pub wall_time: f64,
    pub norme: f64,
    pub transposed: bool,
    pub shape: (usize, usize),
}

impl RunReport {
    pub fn values(&self) -> Vec<f64> {
        self.triplets.iter().map(|t| t.value).collect()
    }

    /// `√Σ‖r⁽ⁱ'ᶜ⁾‖²`, i.e. `√(‖AV_c − U_cΣ_c‖²_F + ‖AᵀU_c − V_cΣ_c‖²_F)`.
    pub fn aggregate_residual(&self) -> f64 {
        self.triplets.iter().map(|t| t.residual * t.residual).sum::<f64>().sqrt()
    }

    /// Total inner operator applications over all solves.
    pub fn op_applications(&self) -> usize {
        self.trace.iter().map(|s| s.op_applications).sum()
    }

    /// The product count predicted by the trace.
    pub fn accounted_mvs(&self) -> u64 {
        2 * self.expansions as u64 + 2 * self.op_applications() as u64 + self.auxiliary_products
    }
}

/// Recomputes `‖[Av − σu; Aᵀu − σv]‖` with fresh products.
pub fn triplet_residual(a: &SparseMatrix, value: f64, left: &DVector<f64>, right: &DVector<f64>) -> Result<f64> {
    let mut top = a.apply(right.as_slice())?;
    top.axpy(-value, left, 1.0);
    let mut bottom = a.apply_transpose(left.as_slice())?;
    bottom.axpy(-value, right, 1.0);
    Ok((top.norm_squared() + bottom.norm_squared()).sqrt())
}

/// Computes the `ℓ` singular triplets of `a` nearest `cfg.tau`.
///
/// The matrix handle's product tally is reset at the start, so afterwards it
/// equals [`RunReport::mvs`].
pub fn solve(a: &SparseMatrix, cfg: &SolverConfig) -> Result<RunReport> {
    let (m0, n0) = a.shape();
    cfg.validate(m0, n0)?;
    let transposed = m0 < n0;
    let op = Oriented::new(a, transposed);
    let (m, n) = (op.nrows(), op.ncols());
    a.reset_mv_count();
    let start = Instant::now();
    let norme = op.norm_estimates().norme;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let (u0_user, v0_user) = if transposed {
        (&cfg.v0, &cfg.u0)
    } else {
        (&cfg.u0, &cfg.v0)
    };
    let u0 = start_vector(u0_user, m);
    let v0 = start_vector(v0_user, n);

    let mut uc = DMatrix::<f64>::zeros(m, 0);
    let mut vc = DMatrix::<f64>::zeros(n, 0);
    let mut triplets: Vec<ConvergedTriplet> = Vec::new();
    let mut trace = Vec::new();
    let mut deflations = Vec::new();
    let mut expansions = 0usize;
    let mut auxiliary = 0u64;
    let mut current_inner: Vec<usize> = Vec::new();
    let maxit_inner = cfg.maxit_inner.unwrap_or_else(|| default_maxit(m + n));
    let max_outer = cfg.max_outer();

    let mut sub = SubspacePair::empty(m, n);
    sub.expand(op, &u0, &v0, (&uc, &vc), &mut rng)?;
    expansions += 1;

    // guards against repeating a refresh that changed nothing
    let mut refreshed_exhausted = false;
    let mut recomputed = false;

    let termination = loop {
        let ritz = extract_ritz(&sub, cfg.tau)?;
        let k = sub.dim();

        if check_convergence(ritz.res_norms[0], norme, cfg.tol) {
            let left = ritz.u.column(0).into_owned();
            let right = ritz.v.column(0).into_owned();
            let fresh = fresh_residual(op, ritz.theta[0], &left, &right)?;
            auxiliary += 2;
            if !check_convergence(fresh, norme, cfg.tol) {
                // cached products drifted; rebuild them once
                if recomputed {
                    break Termination::Stalled;
                }
                auxiliary += sub.recompute_products(op)?;
                recomputed = true;
                continue;
            }
            recomputed = false;
            refreshed_exhausted = false;

            let mv_before = a.mv_count();
            uc = hcat(&uc, &DMatrix::from_columns(std::slice::from_ref(&left)));
            vc = hcat(&vc, &DMatrix::from_columns(std::slice::from_ref(&right)));
            let (out_left, out_right) = if transposed { (right, left) } else { (left, right) };
            triplets.push(ConvergedTriplet {
                value: ritz.theta[0],
                left: out_left,
                right: out_right,
                residual: fresh,
                outer_iteration: trace.len(),
                inner_iterations: std::mem::take(&mut current_inner),
            });
            if triplets.len() == cfg.ell {
                deflations.push(DeflationEvent {
                    index: triplets.len() - 1,
                    value: ritz.theta[0],
                    residual: fresh,
                    k_before: k,
                    k_after: k,
                    mv_before_purge: mv_before,
                    mv_after_purge: mv_before,
                });
                break Termination::Converged;
            }
            sub = purge(&ritz);
            deflations.push(DeflationEvent {
                index: triplets.len() - 1,
                value: ritz.theta[0],
                residual: fresh,
                k_before: k,
                k_after: sub.dim(),
                mv_before_purge: mv_before,
                mv_after_purge: a.mv_count(),
            });
            if sub.dim() == 0 {
                let s = orthonormal_or_random(&u0, &[&uc], &mut rng)?.0;
                let t = orthonormal_or_random(&v0, &[&vc], &mut rng)?.0;
                sub.expand(op, &s, &t, (&uc, &vc), &mut rng)?;
                expansions += 1;
            }
            continue;
        }

        if vc.ncols() + k >= n {
            // Ṽ spans the complement of V_c: rebuild Ũ so extraction is exact
            if refreshed_exhausted {
                break Termination::Stalled;
            }
            auxiliary += sub.refresh_left_from_range(op, &uc, &mut rng)?;
            refreshed_exhausted = true;
            continue;
        }

        if trace.len() >= max_outer {
            break Termination::MaxOuter;
        }

        let selected = select_cluster(&ritz, cfg.tau, cfg.pretol1, cfg.pretol2, norme);
        let corr = assemble_correction(op, &ritz, &selected, &uc, &vc, cfg.tau, cfg.mode)?;
        let rtol = inner_tolerance(&ritz.theta, norme, cfg.eps_inner);
        let rp_norm = corr.rhs.norm();
        let outcome = if rp_norm > 0.0 {
            let rel = (rtol * ritz.res_norms[0] / rp_norm).min(MAX_MINRES_RTOL);
            Some(Minres::new(rel, maxit_inner).solve(&corr.op, &corr.rhs)?)
        } else {
            None
        };
        let (solution, inner_iterations, op_applications, inner_status) = match outcome {
            Some(o) => (o.solution, o.iterations, o.op_applications, o.status),
            None => (DVector::zeros(m + n), 0, 0, MinresStatus::Converged),
        };
        current_inner.push(inner_iterations);

        let m_tilde = corr.used.len();
        let restart_k = if k >= cfg.k_max {
            // the restart selection follows the mode so JDSVD restarts
            // with the standard scheme
            sub = thick_restart(&ritz, &corr.used, cfg.k_min, cfg.k_max - 1);
            Some(sub.dim())
        } else {
            None
        };

        let s = solution.rows(0, m).into_owned();
        let t = solution.rows(m, n).into_owned();
        sub.expand(op, &s, &t, (&uc, &vc), &mut rng)?;
        expansions += 1;
        recomputed = false;

        trace.push(OuterStep {
            iteration: trace.len() + 1,
            k,
            theta1: ritz.theta[0],
            rnorm1: ritz.res_norms[0],
            m_tilde,
            rtol,
            inner_iterations,
            op_applications,
            inner_status,
            restart_k,
            k_after: sub.dim(),
            defl_defect_u: ritz.u.tr_mul(&uc).norm(),
            defl_defect_v: ritz.v.tr_mul(&vc).norm(),
            mv_tally: a.mv_count(),
        });
    };

    Ok(RunReport {
        outer_iterations: trace.len(),
        mvs: a.mv_count(),
        triplets,
        expansions,
        auxiliary_products: auxiliary,
        trace,
        deflations,
        termination,
        wall_time: start.elapsed().as_secs_f64(),
        norme,
        transposed,
        shape: (m0, n0),
    })
}

fn start_vector(user: &Option<Vec<f64>>, len: usize) -> DVector<f64> {
    match user {
        Some(v) => {
            let v = DVector::from_column_slice(v);
            let nrm = v.norm();
            v / nrm
        }
        None => DVector::from_element(len, 1.0 / (len as f64).sqrt()),
    }
}

fn fresh_residual(op: Oriented<'_>, theta: f64, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
    let mut top = op.apply(v.as_slice())?;
    top.axpy(-theta, u, 1.0);
    let mut bottom = op.apply_transpose(u.as_slice())?;
    bottom.axpy(-theta, v, 1.0);
    let r = (top.norm_squared() + bottom.norm_squared()).sqrt();
    if !r.is_finite() {
        return Err(Error::NonFinite("residual"));
    }
    Ok(r)
}
