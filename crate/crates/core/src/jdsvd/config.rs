use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::DEFAULT_AUDIT_CAP;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Rank-one projectors in every correction equation.
    Jdsvd,
    /// Projectors onto all selected Ritz vectors clustered at the target.
    Ipjdsvd,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jdsvd" => Ok(Mode::Jdsvd),
            "ipjdsvd" => Ok(Mode::Ipjdsvd),
            other => Err(Error::InvalidConfig(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    pub tau: f64,
    /// Number of triplets wanted.
    pub ell: usize,
    pub tol: f64,
    pub k_max: usize,
    pub k_min: usize,
    pub eps_inner: f64,
    pub pretol1: f64,
    pub pretol2: f64,
    pub mode: Mode,
    /// Starting left vector; the normalized all-ones vector when absent.
    #[serde(skip)]
    pub u0: Option<Vec<f64>>,
    #[serde(skip)]
    pub v0: Option<Vec<f64>>,
    /// Cap on correction-equation solves; `500·ℓ` when absent.
    pub maxit_outer: Option<usize>,
    /// Cap on MINRES steps per solve; `min(M+N, 3000)` when absent.
    pub maxit_inner: Option<usize>,
    /// Seed for random substitutes of degenerate expansion vectors.
    pub seed: u64,
    pub audit_cap: usize,
}

impl SolverConfig {
    pub fn new(tau: f64, ell: usize) -> Self {
        Self {
            tau,
            ell,
            tol: 1e-8,
            k_max: 30,
            k_min: 3,
            eps_inner: 1e-4,
            pretol1: 0.05,
            pretol2: 0.01,
            mode: Mode::Ipjdsvd,
            u0: None,
            v0: None,
            maxit_outer: None,
            maxit_inner: None,
            seed: 0,
            audit_cap: DEFAULT_AUDIT_CAP,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn max_outer(&self) -> usize {
        self.maxit_outer.unwrap_or(500 * self.ell)
    }

    /// Checks the parameters against an `m × n` matrix (either orientation).
    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return bad(format!("target must be finite and nonnegative, got {}", self.tau));
        }
        if self.ell == 0 {
            return bad("at least one triplet must be requested".into());
        }
        if self.ell > m.min(n) {
            return bad(format!(
                "requested {} triplets but the matrix has only {}",
                self.ell,
                m.min(n)
            ));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad(format!("tol must lie in (0, 1), got {}", self.tol));
        }
        if !(1 < self.k_min && self.k_min < self.k_max) {
            return bad(format!(
                "need 1 < k_min < k_max, got k_min={} k_max={}",
                self.k_min, self.k_max
            ));
        }
        if !(self.eps_inner > 0.0 && self.eps_inner < 1.0) {
            return bad(format!("eps_inner must lie in (0, 1), got {}", self.eps_inner));
        }
        if !(self.pretol1 >= 0.0 && self.pretol1.is_finite())
            || !(self.pretol2 >= 0.0 && self.pretol2.is_finite())
        {
            return bad("pretol1 and pretol2 must be finite and nonnegative".into());
        }
        if self.maxit_outer == Some(0) || self.maxit_inner == Some(0) {
            return bad("iteration caps must be positive".into());
        }
        for (name, v, len) in [("u0", &self.u0, m), ("v0", &self.v0, n)] {
            if let Some(v) = v {
                if v.len() != len {
                    return Err(Error::DimensionMismatch {
                        expected: len,
                        found: v.len(),
                    });
                }
                if v.iter().any(|x| !x.is_finite()) || v.iter().all(|&x| x == 0.0) {
                    return bad(format!("{name} must be finite and nonzero"));
                }
            }
        }
        Ok(())
    }
}
