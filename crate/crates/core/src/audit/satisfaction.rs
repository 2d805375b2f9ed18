//! Randomized one-sided checks of measured MINRES residual histories against
//! the closed-form bound curves.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::audit::angles::subspace_angles;
use crate::audit::bounds::{definite_bound, indefinite_bound, BoundCase, Family, TheoremId};
use crate::audit::planted::{gaussian, PlantedSvd};
use crate::error::{Error, Result};
use crate::minres::Minres;
use crate::operator::{ProjectedAugmentedOp, SymmetricOperator};

/// Absolute slack on every bound comparison.
pub const BOUND_SLACK: f64 = 1e-12;

/// Outcome of one family of randomized checks.
#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem: Option<TheoremId>,
    pub trials: usize,
    pub skipped: usize,
    pub violations: usize,
    /// Largest `measured − allowed`; negative means every trial had room.
    /// Absent when nothing was compared.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_margin: Option<f64>,
    pub steps_checked: usize,
    pub seed: u64,
}

impl CheckSummary {
    pub(crate) fn new(name: impl Into<String>, seed: u64) -> Self {
        Self {
            name: name.into(),
            theorem: None,
            trials: 0,
            skipped: 0,
            violations: 0,
            worst_margin: None,
            steps_checked: 0,
            seed,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// Records one comparison of `measured` against `allowed`.
    pub(crate) fn record(&mut self, measured: f64, allowed: f64) -> bool {
        let margin = measured - allowed;
        self.worst_margin = Some(self.worst_margin.map_or(margin, |w| w.max(margin)));
        self.steps_checked += 1;
        margin <= 0.0
    }
}

/// Relative residual history of MINRES run to its attainable accuracy.
fn relative_history<O: SymmetricOperator + ?Sized>(op: &O, rhs: &DVector<f64>) -> Result<Vec<f64>> {
    let out = Minres::new(1e-14, op.dim()).solve(op, rhs)?;
    let r0 = rhs.norm();
    Ok(out.residual_history.iter().map(|h| h / r0).collect())
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let g = gaussian(n, 1, rng).column(0).into_owned();
    let nrm = g.norm();
    g / nrm
}

/// Checks the bound of `family` on `planted` at target `tau`. Exact families
/// install the exact singular vectors of the `m` (or one) nearest values;
/// perturbed families rotate them by `angle` on both sides, with `δ`
/// measured from the resulting subspaces. Each trial draws a new unit
/// right-hand side orthogonal to the projected vectors; trials whose `δ`
/// makes the bound inapplicable are skipped.
#[allow(clippy::too_many_arguments)]
pub fn check_bound_satisfaction(
    planted: &PlantedSvd,
    tau: f64,
    family: Family,
    m: usize,
    angle: f64,
    trials: usize,
    seed: u64,
    cap: usize,
) -> Result<CheckSummary> {
    let (rows, cols) = planted.shape();
    if rows + cols > cap {
        return Err(Error::AuditCapExceeded { dim: rows + cols, cap });
    }
    let k = if family.block() { m } else { 1 };
    let spectrum = planted.spectrum(tau)?;
    let mut summary = CheckSummary::new(format!("{family:?} m={k} tau={tau}"), seed);
    let a = planted.matrix.as_oriented();
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
        let (up, vp, delta) = if family.perturbed() {
            let (u, v) = planted.singular_block(tau, k);
            let (pu, pv) = planted.perturbed_block(tau, k, angle, angle, &mut rng)?;
            let delta = subspace_angles(&pu, &u, &pv, &v)?.delta(planted.norm());
            (pu, pv, delta)
        } else {
            let (u, v) = planted.singular_block(tau, k);
            (u, v, 0.0)
        };
        summary.trials += 1;
        let bound = match BoundCase::new(family, &spectrum, k, delta) {
            Ok(b) => b,
            Err(Error::BoundInapplicable(_)) => {
                summary.skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        summary.theorem = Some(bound.theorem);
        let op = ProjectedAugmentedOp::new(a, tau, up, vp)?;
        let rhs = op.project(&random_unit(rows + cols, &mut rng));
        let rhs = &rhs / rhs.norm();
        let hist = relative_history(&op, &rhs)?;
        let mut ok = true;
        for (j, h) in hist.iter().enumerate() {
            ok &= summary.record(*h, bound.bound(j) + BOUND_SLACK);
        }
        if !ok {
            summary.violations += 1;
        }
    }
    Ok(summary)
}

/// Random symmetric matrix `Q diag(λ) Qᵀ`.
fn with_spectrum(lambda: &[f64], rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = lambda.len();
    let q = gaussian(n, n, rng).qr().q();
    let mut ql = q.clone();
    for (j, l) in lambda.iter().enumerate() {
        ql.column_mut(j).scale_mut(*l);
    }
    ql * q.transpose()
}

/// Interval bounds for definite and for symmetric-indefinite spectra with
/// equal interval lengths, on random operators of order `dim`.
pub fn check_interval_bounds(dim: usize, trials: usize, seed: u64) -> Result<Vec<CheckSummary>> {
    let mut definite = CheckSummary::new("definite interval", seed);
    let mut indefinite = CheckSummary::new("indefinite intervals", seed);
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
        let alpha = rng.random_range(0.05..1.0);
        let beta = alpha * rng.random_range(2.0..200.0);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let mut lambda: Vec<f64> = (0..dim).map(|_| sign * rng.random_range(alpha..beta)).collect();
        lambda[0] = sign * alpha;
        lambda[1] = sign * beta;
        let op = with_spectrum(&lambda, &mut rng);
        let hist = relative_history(&op, &random_unit(dim, &mut rng))?;
        definite.trials += 1;
        let mut ok = true;
        for (j, h) in hist.iter().enumerate() {
            ok &= definite.record(*h, definite_bound(alpha, beta, j) + BOUND_SLACK);
        }
        definite.violations += usize::from(!ok);

        let a1 = rng.random_range(0.05..1.0);
        let a2 = rng.random_range(0.05..1.0);
        let len = rng.random_range(0.5..20.0);
        let (b1, b2) = (a1 + len, a2 + len);
        let lambda: Vec<f64> = (0..dim)
            .map(|i| match i {
                0 => -a1,
                1 => -b1,
                2 => a2,
                3 => b2,
                _ if rng.random_bool(0.5) => -rng.random_range(a1..b1),
                _ => rng.random_range(a2..b2),
            })
            .collect();
        let op = with_spectrum(&lambda, &mut rng);
        let hist = relative_history(&op, &random_unit(dim, &mut rng))?;
        indefinite.trials += 1;
        let mut ok = true;
        for (j, h) in hist.iter().enumerate() {
            ok &= indefinite.record(*h, indefinite_bound(a1, b1, a2, b2, j) + BOUND_SLACK);
        }
        indefinite.violations += usize::from(!ok);
    }
    Ok(vec![definite, indefinite])
}
