//! Reference spectra and the convergence factors derived from them.

use serde::Serialize;

use crate::dense::jacobi_svd;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Singular values of an `M × N` matrix (`M ≥ N`) with the bookkeeping the
/// convergence bounds need.
#[derive(Debug, Clone, Serialize)]
pub struct OracleSpectrum {
    pub tau: f64,
    /// Ordered by `|σ − τ|`, ties by value.
    pub nearest: Vec<f64>,
    /// Ascending.
    pub ascending: Vec<f64>,
    pub m: usize,
    pub n: usize,
}

/// Which end of the spectrum the target sits at, relative to the first `m`
/// nearest values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SpectrumCase {
    /// `τ > (σ_max + σ_max,m+1)/2`.
    Largest,
    /// `τ < (σ_min + σ_min,m+1)/2`, including `τ < σ_min`.
    Smallest,
    Interior,
}

impl OracleSpectrum {
    /// `values` are the `N` singular values of an `m × n` matrix; the larger
    /// of `m`, `n` plays the role of `M`.
    pub fn new(values: &[f64], m: usize, n: usize, tau: f64) -> Result<Self> {
        let (big, small) = (m.max(n), m.min(n));
        if values.len() != small {
            return Err(Error::DimensionMismatch {
                expected: small,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) || !tau.is_finite() {
            return Err(Error::NonFinite("singular values"));
        }
        let mut ascending = values.to_vec();
        ascending.sort_by(f64::total_cmp);
        let mut nearest = values.to_vec();
        nearest.sort_by(|a, b| crate::dense::cmp_distance(*a, *b, tau));
        Ok(Self {
            tau,
            nearest,
            ascending,
            m: big,
            n: small,
        })
    }

    /// Spectrum of a small matrix from the dense Jacobi SVD.
    pub fn from_matrix(a: &SparseMatrix, tau: f64, cap: usize) -> Result<Self> {
        let (m, n) = a.shape();
        if m + n > cap {
            return Err(Error::AuditCapExceeded { dim: m + n, cap });
        }
        let svd = jacobi_svd(&a.to_dense())?;
        Self::new(&svd.sigma, m, n, tau)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sigma_max(&self) -> f64 {
        *self.ascending.last().unwrap()
    }

    pub fn sigma_min(&self) -> f64 {
        self.ascending[0]
    }

    /// The `k`-th largest value (1-based).
    pub fn max_k(&self, k: usize) -> Option<f64> {
        (k >= 1 && k <= self.n).then(|| self.ascending[self.n - k])
    }

    /// The `k`-th smallest value (1-based).
    pub fn min_k(&self, k: usize) -> Option<f64> {
        (k >= 1 && k <= self.n).then(|| self.ascending[k - 1])
    }

    /// `σ_i` in the nearest-to-target labeling (1-based).
    pub fn sigma(&self, i: usize) -> Option<f64> {
        (i >= 1 && i <= self.n).then(|| self.nearest[i - 1])
    }

    /// `j_o = min{1, M − N}`.
    pub fn j_o(&self) -> usize {
        (self.m - self.n).min(1)
    }

    /// Position of the target when the `m` nearest values are projected out.
    pub fn case(&self, m: usize) -> Result<SpectrumCase> {
        let (hi, lo) = match (self.max_k(m + 1), self.min_k(m + 1)) {
            (Some(h), Some(l)) => (h, l),
            _ => {
                return Err(Error::BoundInapplicable(format!(
                    "need at least {} singular values, have {}",
                    m + 1,
                    self.n
                )))
            }
        };
        let tau = self.tau;
        Ok(if tau > 0.5 * (self.sigma_max() + hi) {
            SpectrumCase::Largest
        } else if tau < 0.5 * (self.sigma_min() + lo) {
            SpectrumCase::Smallest
        } else {
            SpectrumCase::Interior
        })
    }
}

/// Convergence factors for a rank-one (`γ₁–γ₃`) and an `m`-dimensional
/// (`γ₄–γ₆`) projector. Only the factor matching the case is present.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaFactors {
    pub m: usize,
    pub case_single: SpectrumCase,
    pub case_block: SpectrumCase,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub gamma3: Option<f64>,
    pub gamma4: Option<f64>,
    pub gamma5: Option<f64>,
    pub gamma6: Option<f64>,
}

impl GammaFactors {
    /// The factor that governs the single-vector case.
    pub fn single(&self) -> f64 {
        self.gamma1.or(self.gamma2).or(self.gamma3).unwrap()
    }

    /// The factor that governs the block case.
    pub fn block(&self) -> f64 {
        self.gamma4.or(self.gamma5).or(self.gamma6).unwrap()
    }
}

fn factors(spectrum: &OracleSpectrum, k: usize, case: SpectrumCase) -> (Option<f64>, Option<f64>, Option<f64>) {
    let tau = spectrum.tau;
    let smax = spectrum.sigma_max();
    match case {
        SpectrumCase::Largest => {
            let s = spectrum.max_k(k + 1).unwrap();
            (Some((tau - s) / (tau + s)), None, None)
        }
        SpectrumCase::Smallest => {
            let s = spectrum.min_k(k + 1).unwrap();
            (None, Some((s * s - tau * tau) / (smax * smax - tau * tau)), None)
        }
        SpectrumCase::Interior => {
            let s = spectrum.sigma(k + 1).unwrap();
            (None, None, Some((tau - s).abs() / (smax + tau)))
        }
    }
}

/// `γ₁…γ₆` for the target of `spectrum` and a cluster of size `m`.
pub fn gamma_factors(spectrum: &OracleSpectrum, m: usize) -> Result<GammaFactors> {
    if m == 0 {
        return Err(Error::InvalidConfig("cluster size must be positive".into()));
    }
    let case_single = spectrum.case(1)?;
    let case_block = spectrum.case(m)?;
    let (g1, g2, g3) = factors(spectrum, 1, case_single);
    let (g4, g5, g6) = factors(spectrum, m, case_block);
    Ok(GammaFactors {
        m,
        case_single,
        case_block,
        gamma1: g1,
        gamma2: g2,
        gamma3: g3,
        gamma4: g4,
        gamma5: g5,
        gamma6: g6,
    })
}
