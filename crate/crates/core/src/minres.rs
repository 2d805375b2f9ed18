//! MINRES for symmetric, possibly indefinite or singular, operators.
//!
//! Follows the Paige–Saunders recurrence with a zero initial guess. The
//! residual norm estimate `‖rhs − Op x_j‖` is tracked at every step; a final
//! explicit residual check costs one extra operator application.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::SymmetricOperator;

/// Iterations without a relative decrease of [`STAGNATION_DECREASE`] after
/// which the solve is abandoned.
pub const STAGNATION_WINDOW: usize = 50;
pub const STAGNATION_DECREASE: f64 = 1e-14;

/// Upper bound on the default iteration cap.
pub const MAXIT_CEILING: usize = 3000;

/// Default iteration cap for an operator of the given order.
pub fn default_maxit(dim: usize) -> usize {
    dim.min(MAXIT_CEILING)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MinresStatus {
    Converged,
    Maxit,
    Stagnated,
}

#[derive(Debug, Clone)]
pub struct MinresOutcome {
    pub solution: DVector<f64>,
    /// `‖rhs − Op x_j‖` for `j = 0..=iterations`, as carried by the recurrence.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub status: MinresStatus,
    pub op_applications: usize,
    /// Explicitly recomputed `‖rhs − Op x_J‖`.
    pub true_residual: f64,
    /// `x_0 … x_J`, only when requested.
    pub iterates: Option<Vec<DVector<f64>>>,
}

impl MinresOutcome {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().expect("history is never empty")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Minres {
    rtol: f64,
    maxit: usize,
    record_iterates: bool,
}

impl Minres {
    pub fn new(rtol: f64, maxit: usize) -> Self {
        Self {
            rtol,
            maxit,
            record_iterates: false,
        }
    }

    pub fn record_iterates(mut self, yes: bool) -> Self {
        self.record_iterates = yes;
        self
    }

    pub fn solve<O: SymmetricOperator + ?Sized>(
        &self,
        op: &O,
        rhs: &DVector<f64>,
    ) -> Result<MinresOutcome> {
        let n = op.dim();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rhs.len(),
            });
        }
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "MINRES tolerance must lie in (0, 1), got {}",
                self.rtol
            )));
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("MINRES right-hand side"));
        }

        let beta1 = rhs.norm();
        let mut x = DVector::zeros(n);
        let mut iterates = self.record_iterates.then(|| vec![x.clone()]);
        if beta1 == 0.0 {
            return Ok(MinresOutcome {
                solution: x,
                residual_history: vec![0.0],
                iterations: 0,
                status: MinresStatus::Converged,
                op_applications: 0,
                true_residual: 0.0,
                iterates,
            });
        }

        let target = self.rtol * beta1;
        let mut history = vec![beta1];
        let mut status = MinresStatus::Maxit;

        let mut r1 = rhs.clone();
        let mut r2 = rhs.clone();
        let mut y = rhs.clone();
        let (mut oldb, mut beta) = (0.0_f64, beta1);
        let (mut dbar, mut epsln) = (0.0_f64, 0.0_f64);
        let mut phibar = beta1;
        let (mut cs, mut sn) = (-1.0_f64, 0.0_f64);
        let mut w = DVector::zeros(n);
        let mut w2 = DVector::zeros(n);
        let mut anorm = 0.0_f64;
        let mut iterations = 0;

        while iterations < self.maxit {
            iterations += 1;
            let v = &y / beta;
            y = op.apply_to(&v);
            if iterations >= 2 {
                y.axpy(-beta / oldb, &r1, 1.0);
            }
            let alfa = v.dot(&y);
            y.axpy(-alfa / beta, &r2, 1.0);
            std::mem::swap(&mut r1, &mut r2);
            r2.copy_from(&y);
            oldb = beta;
            beta = y.norm();
            if !alfa.is_finite() || !beta.is_finite() {
                return Err(Error::MinresBreakdown {
                    iteration: iterations,
                });
            }
            anorm = anorm.max(alfa.abs()).max(beta).max(oldb);

            let oldeps = epsln;
            let delta = cs * dbar + sn * alfa;
            let gbar = sn * dbar - cs * alfa;
            epsln = sn * beta;
            dbar = -cs * beta;
            let gamma = gbar.hypot(beta);
            let breakdown = beta <= f64::EPSILON * anorm;

            if gamma <= f64::EPSILON * anorm {
                // singular step: the least-squares residual cannot improve
                history.push(phibar);
                if let Some(it) = iterates.as_mut() {
                    it.push(x.clone());
                }
                status = if phibar <= target {
                    MinresStatus::Converged
                } else {
                    MinresStatus::Stagnated
                };
                break;
            }
            cs = gbar / gamma;
            sn = beta / gamma;
            let phi = cs * phibar;
            phibar *= sn.abs();

            let w1 = std::mem::replace(&mut w2, w.clone());
            w = (&v - &w1 * oldeps - &w2 * delta) / gamma;
            x.axpy(phi, &w, 1.0);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::MinresBreakdown {
                    iteration: iterations,
                });
            }
            history.push(phibar);
            if let Some(it) = iterates.as_mut() {
                it.push(x.clone());
            }

            if phibar <= target {
                status = MinresStatus::Converged;
                break;
            }
            if breakdown {
                status = MinresStatus::Stagnated;
                break;
            }
            if iterations >= STAGNATION_WINDOW {
                let old = history[iterations - STAGNATION_WINDOW];
                if old - phibar < STAGNATION_DECREASE * old {
                    status = MinresStatus::Stagnated;
                    break;
                }
            }
        }

        let true_residual = (rhs - op.apply_to(&x)).norm();
        if !true_residual.is_finite() {
            return Err(Error::MinresBreakdown {
                iteration: iterations,
            });
        }
        Ok(MinresOutcome {
            solution: x,
            residual_history: history,
            iterations,
            status,
            op_applications: iterations + 1,
            true_residual,
            iterates,
        })
    }
}

/// Solves `Op x = rhs` from `x₀ = 0` until `‖rhs − Op x‖ ≤ rtol·‖rhs‖`.
pub fn minres<O: SymmetricOperator + ?Sized>(
    op: &O,
    rhs: &DVector<f64>,
    rtol: f64,
    maxit: usize,
) -> Result<MinresOutcome> {
    Minres::new(rtol, maxit).solve(op, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::make_projected_op;
    use crate::sparse::SparseMatrix;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::cell::Cell;

    fn diag(d: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(d))
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    struct Counting<'a> {
        inner: &'a DMatrix<f64>,
        calls: Cell<usize>,
    }

    impl SymmetricOperator for Counting<'_> {
        fn dim(&self) -> usize {
            self.inner.nrows()
        }
        fn apply_to(&self, x: &DVector<f64>) -> DVector<f64> {
            self.calls.set(self.calls.get() + 1);
            self.inner * x
        }
    }

    #[test]
    fn identity_converges_in_one_step() {
        let a = DMatrix::<f64>::identity(5, 5);
        let b = DVector::from_vec(vec![1.0, -2.0, 3.0, 0.5, 4.0]);
        let out = minres(&a, &b, 1e-12, 10).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.status, MinresStatus::Converged);
        assert!((&out.solution - &b).norm() < 1e-14);
        assert_eq!(out.op_applications, 2);
    }

    #[test]
    fn indefinite_two_by_two() {
        let a = diag(&[-1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        let out = minres(&a, &b, 1e-12, 10).unwrap();
        assert!(out.iterations <= 2);
        assert!((out.solution - DVector::from_vec(vec![-1.0, 1.0])).norm() < 1e-12);
    }

    #[test]
    fn three_distinct_eigenvalues_need_three_steps() {
        let a = diag(&[1.0, 2.0, 3.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = random_vec(&mut rng, 3);
        let out = minres(&a, &b, 1e-10, 10).unwrap();
        assert!(out.iterations <= 3);
        let direct = a.clone().lu().solve(&b).unwrap();
        assert!((out.solution - direct).norm() < 1e-9);
    }

    #[test]
    fn zero_rhs_returns_immediately() {
        let a = diag(&[1.0, 2.0]);
        let out = minres(&a, &DVector::zeros(2), 1e-8, 10).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.op_applications, 0);
        assert_eq!(out.status, MinresStatus::Converged);
        assert_eq!(out.solution.norm(), 0.0);
    }

    #[test]
    fn op_applications_are_counted() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d: Vec<f64> = (1..=40).map(|i| i as f64).collect();
        let a = diag(&d);
        let op = Counting {
            inner: &a,
            calls: Cell::new(0),
        };
        let out = minres(&op, &random_vec(&mut rng, 40), 1e-6, 100).unwrap();
        assert_eq!(op.calls.get(), out.op_applications);
        assert_eq!(out.op_applications, out.iterations + 1);
        assert_eq!(out.residual_history.len(), out.iterations + 1);
    }

    #[test]
    fn maxit_reported() {
        let d: Vec<f64> = (1..=30).map(|i| (i as f64).powi(2)).collect();
        let a = diag(&d);
        let b = DVector::from_element(30, 1.0);
        let out = minres(&a, &b, 1e-12, 4).unwrap();
        assert_eq!(out.status, MinresStatus::Maxit);
        assert_eq!(out.iterations, 4);
    }

    #[test]
    fn singular_incompatible_system_does_not_claim_convergence() {
        let a = diag(&[1.0, 0.0]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        let out = minres(&a, &b, 1e-10, 50).unwrap();
        assert_ne!(out.status, MinresStatus::Converged);
        assert!((out.final_residual() - 1.0).abs() < 1e-10);
        assert!((out.true_residual - 1.0).abs() < 1e-10);
    }

    #[test]
    fn nan_operator_is_an_error() {
        let a = diag(&[1.0, f64::NAN]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(
            minres(&a, &b, 1e-8, 10),
            Err(Error::MinresBreakdown { iteration: 1 })
        ));
        assert!(minres(&a, &DVector::from_vec(vec![f64::NAN, 0.0]), 1e-8, 10).is_err());
        assert!(minres(&diag(&[1.0]), &DVector::from_vec(vec![1.0]), 1.5, 10).is_err());
    }

    #[test]
    fn recorded_iterates_reproduce_history() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = DMatrix::from_fn(15, 15, |_, _| rng.random_range(-1.0..1.0));
        let a = &g + g.transpose();
        let b = random_vec(&mut rng, 15);
        let out = Minres::new(1e-10, 30).record_iterates(true).solve(&a, &b).unwrap();
        let its = out.iterates.as_ref().unwrap();
        assert_eq!(its.len(), out.residual_history.len());
        for (x, h) in its.iter().zip(&out.residual_history) {
            let r = (&b - &a * x).norm();
            assert!((r - h).abs() <= 1e-9 * b.norm(), "{r} vs {h}");
        }
    }

    /// Orthonormal Krylov basis by Arnoldi with full reorthogonalization.
    fn krylov_basis(a: &DMatrix<f64>, b: &DVector<f64>, j: usize) -> DMatrix<f64> {
        let mut cols: Vec<DVector<f64>> = vec![b / b.norm()];
        while cols.len() < j {
            let mut w = a * cols.last().unwrap();
            for _ in 0..2 {
                for q in &cols {
                    let c = q.dot(&w);
                    w.axpy(-c, q, 1.0);
                }
            }
            let nrm = w.norm();
            cols.push(w / nrm);
        }
        DMatrix::from_columns(&cols)
    }

    #[test]
    fn residuals_are_krylov_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let g = DMatrix::from_fn(25, 25, |_, _| rng.random_range(-1.0..1.0));
        let q = g.qr().q();
        let eig: Vec<f64> = (0..25)
            .map(|i| if i % 2 == 0 { 1.0 + i as f64 } else { -2.0 - i as f64 })
            .collect();
        let a = &q * diag(&eig) * q.transpose();
        let a = (&a + a.transpose()) * 0.5;
        let b = random_vec(&mut rng, 25);
        let out = minres(&a, &b, 1e-15, 10).unwrap();
        for j in 1..=10.min(out.iterations) {
            let k = krylov_basis(&a, &b, j);
            let ak = &a * &k;
            let c = ak.clone().svd(true, true).solve(&b, 1e-14).unwrap();
            let best = (&b - ak * c).norm();
            let got = out.residual_history[j];
            assert!(
                (got - best).abs() <= 1e-10 * best.max(1e-300),
                "j={j}: {got} vs {best}"
            );
        }
    }

    fn definite_bound(alpha: f64, beta: f64, j: usize) -> f64 {
        2.0 * (1.0 - 2.0 / (1.0 + (beta / alpha).sqrt())).powi(j as i32)
    }

    #[test]
    fn definite_interval_bound_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (alpha, beta) = (1.0, 100.0);
        let d: Vec<f64> = (0..60)
            .map(|i| alpha + (beta - alpha) * i as f64 / 59.0)
            .collect();
        let a = diag(&d);
        let b = random_vec(&mut rng, 60);
        let out = minres(&a, &b, 1e-14, 60).unwrap();
        for (j, r) in out.residual_history.iter().enumerate() {
            assert!(r / b.norm() <= definite_bound(alpha, beta, j) + 1e-13);
        }
    }

    #[test]
    fn indefinite_interval_bound_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        // [-β₁,-α₁] ∪ [α₂,β₂] with β₁-α₁ = β₂-α₂
        let (a1, b1, a2, b2) = (0.5, 20.5, 2.0, 22.0);
        let mut d = Vec::new();
        for i in 0..30 {
            let t = i as f64 / 29.0;
            d.push(-(a1 + (b1 - a1) * t));
            d.push(a2 + (b2 - a2) * t);
        }
        let a = diag(&d);
        let b = random_vec(&mut rng, d.len());
        let out = minres(&a, &b, 1e-14, 60).unwrap();
        let ratio = (b1 * b2 / (a1 * a2)).sqrt();
        for (j, r) in out.residual_history.iter().enumerate() {
            let bound = 2.0 * (1.0 - 2.0 / (1.0 + ratio)).powi((j / 2) as i32);
            assert!(r / b.norm() <= bound + 1e-13);
        }
    }

    #[test]
    fn projected_solution_stays_in_complement() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut trip = Vec::new();
        for i in 0..20 {
            for j in 0..14 {
                if rng.random::<f64>() < 0.3 {
                    trip.push((i, j, rng.random_range(-1.0..1.0)));
                }
            }
        }
        let a = SparseMatrix::from_triplets(20, 14, trip).unwrap();
        let up = DMatrix::from_fn(20, 2, |_, _| rng.random_range(-1.0..1.0)).qr().q();
        let vp = DMatrix::from_fn(14, 2, |_, _| rng.random_range(-1.0..1.0)).qr().q();
        let op = make_projected_op(&a, 0.4, up.clone(), vp.clone()).unwrap();
        let rhs = op.project(&random_vec(&mut rng, 34));
        let before = a.mv_count();
        let out = minres(&op, &rhs, 1e-10, 34).unwrap();
        assert_eq!(a.mv_count() - before, 2 * out.op_applications as u64);
        let x = &out.solution;
        assert!(up.tr_mul(&x.rows(0, 20)).amax() <= 1e-10 * x.norm());
        assert!(vp.tr_mul(&x.rows(20, 14)).amax() <= 1e-10 * x.norm());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn history_is_monotone(seed in any::<u64>(), n in 2usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let a = &g + g.transpose();
            let b = random_vec(&mut rng, n);
            let out = minres(&a, &b, 1e-12, 2 * n).unwrap();
            let slack = 1e-13 * b.norm();
            for w in out.residual_history.windows(2) {
                prop_assert!(w[1] <= w[0] + slack);
            }
            if out.status == MinresStatus::Converged {
                prop_assert!(out.final_residual() <= 1e-12 * b.norm());
            }
        }
    }
}
