//! Small dense kernels: a one-sided Jacobi SVD, the target-ordered SVD of the
//! projection matrix, and Gram-Schmidt orthonormalization against a basis.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default relative threshold under which an expansion vector is considered
/// to lie inside the current basis.
pub const DEFAULT_DROP_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

/// Thin SVD `A = U diag(sigma) Vᵀ` of an `m × n` matrix.
#[derive(Debug, Clone)]
pub struct DenseSvd {
    /// Singular values, not sorted.
    pub sigma: Vec<f64>,
    /// `m × min(m, n)` with orthonormal columns.
    pub u: DMatrix<f64>,
    /// `n × min(m, n)` with orthonormal columns.
    pub v: DMatrix<f64>,
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Columns of `A V` are rotated until pairwise orthogonal to machine
/// precision, which gives singular values with high relative accuracy.
/// Exactly zero singular values get left vectors from an orthonormal
/// completion so that `U` always has orthonormal columns.
pub fn jacobi_svd(a: &DMatrix<f64>) -> Result<DenseSvd> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("dense SVD input"));
    }
    if a.nrows() < a.ncols() {
        let t = jacobi_svd(&a.transpose())?;
        return Ok(DenseSvd {
            sigma: t.sigma,
            u: t.v,
            v: t.u,
        });
    }
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let tol = f64::EPSILON * (m.max(1) as f64);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if gamma == 0.0 || alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.abs() <= tol * (alpha.sqrt() * beta.sqrt()) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let mut u = DMatrix::<f64>::zeros(m, n);
    let mut missing = Vec::new();
    for (j, &s) in sigma.iter().enumerate() {
        if s > smax * f64::EPSILON * f64::EPSILON && s > f64::MIN_POSITIVE {
            u.set_column(j, &(w.column(j) / s));
        } else {
            missing.push(j);
        }
    }
    if !missing.is_empty() {
        // complete from coordinate vectors
        let mut basis: Vec<DVector<f64>> = (0..n)
            .filter(|j| !missing.contains(j))
            .map(|j| u.column(j).into_owned())
            .collect();
        let mut candidates = 0..m;
        for &j in &missing {
            let q = stack_columns(m, &basis);
            let x = candidates
                .by_ref()
                .find_map(|c| {
                    let mut e = DVector::<f64>::zeros(m);
                    e[c] = 1.0;
                    orthonormalize_against(&e, &[&q], 1e-8)
                })
                .expect("orthonormal completion ran out of candidates");
            u.set_column(j, &x);
            basis.push(x);
        }
    }
    Ok(DenseSvd { sigma, u, v })
}

/// Stacks vectors into an `n × len` matrix; an empty slice gives `n × 0`.
pub fn stack_columns(n: usize, cols: &[DVector<f64>]) -> DMatrix<f64> {
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(cols)
    }
}

fn rotate_columns(x: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..x.nrows() {
        let xp = x[(i, p)];
        let xq = x[(i, q)];
        x[(i, p)] = c * xp - s * xq;
        x[(i, q)] = s * xp + c * xq;
    }
}

/// Singular triplets `(θᵢ, cᵢ, dᵢ)` of the projection matrix, ordered by
/// distance from the target.
#[derive(Debug, Clone)]
pub struct SmallSvd {
    pub theta: Vec<f64>,
    /// Column `i` is `cᵢ`.
    pub left: DMatrix<f64>,
    /// Column `i` is `dᵢ`.
    pub right: DMatrix<f64>,
    /// `order[i]` is the index of triplet `i` in the unsorted decomposition.
    pub order: Vec<usize>,
}

impl SmallSvd {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}

/// SVD of the `k × k` projection matrix with triplets ordered by `|θ − τ|`.
///
/// Ties are broken by ascending `θ`, then by the index in the unsorted
/// decomposition, so the order is deterministic.
pub fn small_svd(h: &DMatrix<f64>, tau: f64) -> Result<SmallSvd> {
    if h.nrows() == 0 || h.nrows() != h.ncols() {
        return Err(Error::InvalidMatrix(format!(
            "projection matrix must be square and nonempty, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let svd = jacobi_svd(h)?;
    let k = svd.sigma.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (svd.sigma[a], svd.sigma[b]);
        (sa - tau)
            .abs()
            .total_cmp(&(sb - tau).abs())
            .then(sa.total_cmp(&sb))
            .then(a.cmp(&b))
    });
    let theta = order.iter().map(|&i| svd.sigma[i]).collect();
    let left = DMatrix::from_fn(k, k, |r, c| svd.u[(r, order[c])]);
    let right = DMatrix::from_fn(k, k, |r, c| svd.v[(r, order[c])]);
    Ok(SmallSvd {
        theta,
        left,
        right,
        order,
    })
}

/// Orthonormalizes `v` against the columns of every block in `blocks` using
/// classical Gram-Schmidt with one re-orthogonalization pass.
///
/// Returns `None` when the projected vector has norm `≤ drop_tol · ‖v‖`.
/// The blocks must have orthonormal columns jointly.
pub fn orthonormalize_against(
    v: &DVector<f64>,
    blocks: &[&DMatrix<f64>],
    drop_tol: f64,
) -> Option<DVector<f64>> {
    let v_norm = v.norm();
    if v_norm == 0.0 || !v_norm.is_finite() {
        return None;
    }
    let mut w = v.clone();
    for _ in 0..2 {
        for q in blocks {
            if q.ncols() == 0 {
                continue;
            }
            debug_assert_eq!(q.nrows(), v.len());
            let coeffs = q.tr_mul(&w);
            w -= *q * coeffs;
        }
    }
    let w_norm = w.norm();
    if w_norm <= drop_tol * v_norm {
        return None;
    }
    Some(w / w_norm)
}

/// Largest absolute entry of `QᵀQ − I`.
pub fn orthonormality_defect(q: &DMatrix<f64>) -> f64 {
    let g = q.tr_mul(q);
    let mut dev: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g[(i, j)] - target).abs());
        }
    }
    dev
}

/// Ordering helper shared by the extraction and audit code.
pub(crate) fn cmp_distance(a: f64, b: f64, tau: f64) -> Ordering {
    (a - tau).abs().total_cmp(&(b - tau).abs()).then(a.total_cmp(&b))
}
