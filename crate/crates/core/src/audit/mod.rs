//! Convergence audit: bound formulas, reference spectra, and randomized
//! checks of MINRES on the correction equations of small planted problems.

pub mod angles;
pub mod bounds;
pub mod equivalence;
pub mod planted;
pub mod satisfaction;
pub mod spectrum;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use angles::{sine_distance, subspace_angles, AngleReport};
pub use bounds::{bound_curve, definite_bound, indefinite_bound, BoundCase, Family, TheoremId};
pub use equivalence::{
    eigen_perturbation, rtail_probe, rtail_sequence, verify_equivalence, EquivalenceReport,
    PerturbationCheck, RtailReport,
};
pub use planted::{planted_svd, rotate, PlantedSvd};
pub use satisfaction::{check_bound_satisfaction, check_interval_bounds, CheckSummary, BOUND_SLACK};
pub use spectrum::{gamma_factors, GammaFactors, OracleSpectrum, SpectrumCase};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operator::ProjectedAugmentedOp;
use equivalence::random_block;
use planted::gaussian;

/// Limit on residual-history and iterate disagreement between the projected
/// and reduced solves.
pub const EQUIVALENCE_TOL: f64 = 1e-10;

/// Allowed spread of `‖r_tail‖/‖r‖²` around its median along a sequence.
pub const RTAIL_SPREAD: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditCase {
    Thm2,
    Thm3,
    Thm5,
    Thm7,
    Thm8,
    Thm9,
    Equivalence,
    Rtail,
    All,
}

impl AuditCase {
    pub const NAMES: [&'static str; 9] = [
        "thm2",
        "thm3",
        "thm5",
        "thm7",
        "thm8",
        "thm9",
        "equivalence",
        "rtail",
        "all",
    ];

    fn includes(self, other: AuditCase) -> bool {
        self == AuditCase::All || self == other
    }
}

impl FromStr for AuditCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "thm2" => AuditCase::Thm2,
            "thm3" => AuditCase::Thm3,
            "thm5" => AuditCase::Thm5,
            "thm7" => AuditCase::Thm7,
            "thm8" => AuditCase::Thm8,
            "thm9" => AuditCase::Thm9,
            "equivalence" => AuditCase::Equivalence,
            "rtail" => AuditCase::Rtail,
            "all" => AuditCase::All,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown audit case '{other}' (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }
}

impl fmt::Display for AuditCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = *self as usize;
        f.write_str(Self::NAMES[i])
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub case: AuditCase,
    pub trials: usize,
    pub seed: u64,
    pub audit_cap: usize,
    pub checks: Vec<CheckSummary>,
}

impl AuditReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn skipped(&self) -> usize {
        self.checks.iter().map(|c| c.skipped).sum()
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }
}

/// A planted problem with a target and a cluster size.
pub struct AuditInstance {
    pub name: &'static str,
    pub planted: PlantedSvd,
    pub tau: f64,
    pub m: usize,
}

impl AuditInstance {
    /// Rotation angle giving `δ` equal to a quarter of the gap that the
    /// perturbed bound for a cluster of size `k` requires.
    pub fn safe_angle(&self, k: usize) -> Result<f64> {
        let spectrum = self.planted.spectrum(self.tau)?;
        let gap = (spectrum.sigma(k + 1).unwrap() - self.tau).abs();
        Ok((gap / (16.0 * self.planted.norm())).sqrt().asin())
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// The fixed set of planted problems, one or more per spectrum case.
pub fn standard_instances(seed: u64) -> Result<Vec<AuditInstance>> {
    let mut largest = linspace(0.1, 1.0, 19);
    largest.push(1.5);
    let mut tall_small = vec![0.2];
    tall_small.extend(linspace(0.8, 3.0, 19));
    Ok(vec![
        AuditInstance {
            name: "largest",
            planted: planted_svd(30, 20, &largest, seed)?,
            tau: 1.6,
            m: 2,
        },
        AuditInstance {
            name: "smallest-square",
            planted: planted_svd(5, 5, &[0.10, 0.11, 1.0, 1.5, 2.0], seed.wrapping_add(1))?,
            tau: 0.05,
            m: 2,
        },
        AuditInstance {
            name: "smallest-tall",
            planted: planted_svd(30, 20, &tall_small, seed.wrapping_add(2))?,
            tau: 0.15,
            m: 2,
        },
        AuditInstance {
            name: "interior",
            planted: planted_svd(30, 20, &linspace(0.1, 3.0, 20), seed.wrapping_add(3))?,
            tau: 1.52,
            m: 2,
        },
    ])
}

/// Runs the requested part of the audit on [`standard_instances`].
pub fn run_audit(case: AuditCase, trials: usize, seed: u64, cap: usize) -> Result<AuditReport> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be positive".into()));
    }
    let instances = standard_instances(seed)?;
    let mut checks = Vec::new();
    if case.includes(AuditCase::Thm2) {
        checks.extend(check_interval_bounds(40, trials, seed)?);
    }
    for (family, this) in [
        (Family::T3, AuditCase::Thm3),
        (Family::T5, AuditCase::Thm5),
        (Family::T7, AuditCase::Thm7),
        (Family::T9, AuditCase::Thm9),
    ] {
        if !case.includes(this) {
            continue;
        }
        for inst in &instances {
            let k = if family.block() { inst.m } else { 1 };
            let angle = if family.perturbed() { inst.safe_angle(k)? } else { 0.0 };
            let mut s = check_bound_satisfaction(
                &inst.planted,
                inst.tau,
                family,
                inst.m,
                angle,
                trials,
                seed,
                cap,
            )?;
            s.name = format!("{} {}", this, inst.name);
            checks.push(s);
        }
    }
    if case.includes(AuditCase::Thm8) {
        checks.push(eigen_checks(&instances, trials, seed, cap)?);
    }
    if case.includes(AuditCase::Equivalence) {
        checks.extend(equivalence_checks(seed, cap)?);
    }
    if case.includes(AuditCase::Rtail) {
        checks.push(rtail_checks(&instances, seed, cap)?);
    }
    Ok(AuditReport {
        case,
        trials,
        seed,
        audit_cap: cap,
        checks,
    })
}

fn eigen_checks(instances: &[AuditInstance], trials: usize, seed: u64, cap: usize) -> Result<CheckSummary> {
    use rand::Rng;
    let mut s = CheckSummary::new("thm8 eigenvalue shift", seed);
    for inst in instances {
        for trial in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
            let k = if trial % 2 == 0 { 1 } else { inst.m };
            let au = rng.random_range(1e-3..0.3);
            let av = rng.random_range(1e-3..0.3);
            let c = eigen_perturbation(&inst.planted, inst.tau, k, au, av, rng.random(), cap)?;
            s.trials += 1;
            if !s.record(c.max_shift, c.delta) {
                s.violations += 1;
            }
        }
    }
    Ok(s)
}

/// One projected-operator instance for the projected/reduced comparison.
pub struct EquivalenceInstance {
    pub name: String,
    pub planted: PlantedSvd,
    pub tau: f64,
    pub up: DMatrix<f64>,
    pub vp: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

impl EquivalenceInstance {
    pub fn operator(&self) -> Result<ProjectedAugmentedOp<'_>> {
        ProjectedAugmentedOp::new(self.planted.matrix.as_oriented(), self.tau, self.up.clone(), self.vp.clone())
    }
}

/// Ten planted instances on which MINRES converges well before the Krylov
/// space exhausts the operator. Near exhaustion, two evaluations of the very
/// same operator in different summation orders already give histories that
/// differ far above rounding, which would mask the identity being checked.
pub fn equivalence_instances(seed: u64) -> Result<Vec<EquivalenceInstance>> {
    let mut bands = linspace(0.5, 1.0, 30);
    bands.extend(linspace(2.0, 3.0, 30));
    let layouts: [(&str, usize, usize, Vec<f64>, f64); 5] = [
        ("above", 80, 60, linspace(0.1, 3.0, 60), 3.2),
        ("below-tall", 80, 60, linspace(1.0, 3.0, 60), 0.3),
        ("below-square", 60, 60, linspace(1.0, 3.0, 60), 0.3),
        ("band-gap-tall", 80, 60, bands.clone(), 1.5),
        ("band-gap-square", 60, 60, bands, 1.5),
    ];
    let mut out = Vec::with_capacity(10);
    for (li, (name, rows, cols, sigma, tau)) in layouts.into_iter().enumerate() {
        let planted = planted_svd(rows, cols, &sigma, seed.wrapping_add(li as u64))?;
        for variant in 0..2usize {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add((10 * li + variant) as u64));
            // random projectors may place eigenvalues inside the band gap
            let random = variant == 1 && li < 3;
            let p = 1 + (li + variant) % 3;
            let (up, vp) = if random {
                (random_block(rows, p, &mut rng), random_block(cols, p, &mut rng))
            } else {
                planted.singular_block(tau, p)
            };
            let rhs = gaussian(rows + cols, 1, &mut rng).column(0).into_owned();
            out.push(EquivalenceInstance {
                name: format!("{name} p={p}{}", if random { " random" } else { "" }),
                planted: planted.clone(),
                tau,
                up,
                vp,
                rhs,
            });
        }
    }
    Ok(out)
}

fn equivalence_checks(seed: u64, cap: usize) -> Result<Vec<CheckSummary>> {
    let mut hist = CheckSummary::new("equivalence history", seed);
    let mut recon = CheckSummary::new("equivalence reconstruction", seed);
    for inst in equivalence_instances(seed)? {
        let op = inst.operator()?;
        let rep = verify_equivalence(&op, &inst.rhs, 1e-10, cap, seed)?;
        hist.trials += 1;
        recon.trials += 1;
        if !hist.record(rep.history_gap, EQUIVALENCE_TOL) {
            hist.violations += 1;
        }
        if !recon.record(rep.reconstruction_gap, EQUIVALENCE_TOL) {
            recon.violations += 1;
        }
    }
    Ok(vec![hist, recon])
}

/// The tail stays `O(‖r‖²)`: along eight halvings of the subspace error,
/// `‖r_tail‖/‖r‖²` never grows past [`RTAIL_SPREAD`] times its first value.
fn rtail_checks(instances: &[AuditInstance], seed: u64, cap: usize) -> Result<CheckSummary> {
    let mut s = CheckSummary::new("rtail second order", seed);
    for inst in instances.iter().filter(|i| i.planted.shape().1 > 2 * i.m) {
        let seq = rtail_sequence(&inst.planted, inst.tau, inst.m, 1e-2, 8, seed, cap)?;
        let first = seq[0].ratio;
        s.trials += 1;
        let mut ok = true;
        for r in &seq {
            ok &= s.record(r.ratio / first, RTAIL_SPREAD);
        }
        if !ok {
            s.violations += 1;
        }
    }
    Ok(s)
}
