//! Closed-form MINRES residual bounds for the (preconditioned) correction
//! equation, with exact or perturbed projected vectors.

use serde::Serialize;

use crate::audit::spectrum::{OracleSpectrum, SpectrumCase};
use crate::error::{Error, Result};

/// Which bound family: rank-one or block projector, exact or perturbed
/// vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    /// Exact `(u₁, v₁)`.
    T3,
    /// Perturbed `(ũ₁, ṽ₁)`.
    T5,
    /// Exact `m`-dimensional singular subspaces.
    T7,
    /// Perturbed `m`-dimensional subspaces.
    T9,
}

impl Family {
    pub fn perturbed(self) -> bool {
        matches!(self, Family::T5 | Family::T9)
    }

    pub fn block(self) -> bool {
        matches!(self, Family::T7 | Family::T9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TheoremId {
    T3i,
    T3ii,
    T3iii,
    T5i,
    T5ii,
    T5iii,
    T7i,
    T7ii,
    T7iii,
    T9i,
    T9ii,
    T9iii,
}

impl TheoremId {
    fn of(family: Family, case: SpectrumCase) -> Self {
        use SpectrumCase::*;
        use TheoremId::*;
        match (family, case) {
            (Family::T3, Largest) => T3i,
            (Family::T3, Smallest) => T3ii,
            (Family::T3, Interior) => T3iii,
            (Family::T5, Largest) => T5i,
            (Family::T5, Smallest) => T5ii,
            (Family::T5, Interior) => T5iii,
            (Family::T7, Largest) => T7i,
            (Family::T7, Smallest) => T7ii,
            (Family::T7, Interior) => T7iii,
            (Family::T9, Largest) => T9i,
            (Family::T9, Smallest) => T9ii,
            (Family::T9, Interior) => T9iii,
        }
    }
}

/// A fully specified bound curve `j ↦ bound(j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCase {
    pub theorem: TheoremId,
    pub case: SpectrumCase,
    /// Cluster size (1 for the rank-one families).
    pub m: usize,
    /// Perturbation radius; 0 for exact vectors.
    pub delta: f64,
    pub j_o: usize,
    /// Endpoints of the eigenvalue interval(s) the bound is built on. For the
    /// definite case only `alpha`/`beta` are meaningful.
    pub alpha: f64,
    pub beta: f64,
    /// Per-step contraction `1 − 2/(1 + ratio)`.
    pub factor: f64,
    /// `((σ_max + δ)/τ)^{j_o}` in the smallest case, 1 otherwise.
    pub prefactor: f64,
}

impl BoundCase {
    /// Builds the bound for a spectrum, cluster size and perturbation radius.
    /// The rank-one families ignore `m`.
    pub fn new(family: Family, spectrum: &OracleSpectrum, m: usize, delta: f64) -> Result<Self> {
        let m = if family.block() { m } else { 1 };
        if m == 0 {
            return Err(Error::InvalidConfig("cluster size must be positive".into()));
        }
        let delta = if family.perturbed() { delta } else { 0.0 };
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::NonFinite("perturbation radius"));
        }
        let case = spectrum.case(m)?;
        let theorem = TheoremId::of(family, case);
        let tau = spectrum.tau;
        let smax = spectrum.sigma_max();
        let next = spectrum.sigma(m + 1).unwrap();
        if delta >= (next - tau).abs() {
            return Err(Error::BoundInapplicable(format!(
                "delta {delta:.3e} is not below |sigma_(m+1) - tau| = {:.3e}",
                (next - tau).abs()
            )));
        }
        let j_o = spectrum.j_o();
        let (alpha, beta, ratio, prefactor) = match case {
            SpectrumCase::Largest => {
                let s = spectrum.max_k(m + 1).unwrap();
                let alpha = tau - s - delta;
                let beta = tau + s + delta;
                if alpha <= 0.0 {
                    return Err(Error::BoundInapplicable("empty definite interval".into()));
                }
                (alpha, beta, (beta / alpha).sqrt(), 1.0)
            }
            SpectrumCase::Smallest => {
                let s = spectrum.min_k(m + 1).unwrap();
                let lo = s - delta;
                if lo <= tau {
                    return Err(Error::BoundInapplicable(
                        "perturbed gap closes the positive interval".into(),
                    ));
                }
                if j_o == 1 && tau == 0.0 {
                    return Err(Error::BoundInapplicable(
                        "zero target with M > N makes the operator singular".into(),
                    ));
                }
                let hi = smax + delta;
                let ratio = ((hi * hi - tau * tau) / (lo * lo - tau * tau)).sqrt();
                let prefactor = if j_o == 1 { hi / tau } else { 1.0 };
                (lo - tau, hi - tau, ratio, prefactor)
            }
            SpectrumCase::Interior => {
                let gap = (next - tau).abs() - delta;
                let width = smax + tau + delta;
                (gap, width, width / gap, 1.0)
            }
        };
        Ok(Self {
            theorem,
            case,
            m,
            delta,
            j_o,
            alpha,
            beta,
            factor: 1.0 - 2.0 / (1.0 + ratio),
            prefactor,
        })
    }

    /// Upper bound on `‖r_in,j‖/‖r‖`.
    pub fn bound(&self, j: usize) -> f64 {
        bound_curve(self, j)
    }
}

/// Evaluates the bound of `case` after `j` MINRES steps.
pub fn bound_curve(case: &BoundCase, j: usize) -> f64 {
    match case.case {
        SpectrumCase::Largest => 2.0 * case.factor.powi(j as i32),
        SpectrumCase::Smallest => {
            let e = j.saturating_sub(case.j_o) / 2;
            2.0 * case.prefactor * case.factor.powi(e as i32)
        }
        SpectrumCase::Interior => 2.0 * case.factor.powi((j / 2) as i32),
    }
}

/// Definite interval bound for eigenvalues in `[α, β]` (or its negative).
pub fn definite_bound(alpha: f64, beta: f64, j: usize) -> f64 {
    2.0 * (1.0 - 2.0 / (1.0 + (beta / alpha).sqrt())).powi(j as i32)
}

/// Bound for eigenvalues in `[−β₁, −α₁] ∪ [α₂, β₂]` with equal lengths.
pub fn indefinite_bound(a1: f64, b1: f64, a2: f64, b2: f64, j: usize) -> f64 {
    let ratio = (b1 * b2 / (a1 * a2)).sqrt();
    2.0 * (1.0 - 2.0 / (1.0 + ratio)).powi((j / 2) as i32)
}
