//! Structural identities: projected vs reduced MINRES, the neglected tail
//! of the preconditioned correction equation, and eigenvalue perturbation of
//! the reduced operator.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::audit::angles::{subspace_angles, AngleReport};
use crate::audit::planted::{gaussian, PlantedSvd};
use crate::error::{Error, Result};
use crate::jdsvd::{extract_ritz, RitzSet, SubspacePair};
use crate::minres::Minres;
use crate::operator::{assemble_reduced_op_seeded, concat, ProjectedAugmentedOp};
use crate::sparse::Oriented;

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub iterations_projected: usize,
    pub iterations_reduced: usize,
    /// Number of history entries compared.
    pub compared: usize,
    /// `max_j |‖r_j‖ − ‖r′_j‖| / ‖r‖`.
    pub history_gap: f64,
    /// `max_j ‖w_j − W̃ z_j‖ / max_j ‖w_j‖`.
    pub reconstruction_gap: f64,
}

/// Runs MINRES on the projected operator and on its dense reduced form
/// `B′ z = W̃ᵀ rhs`, and compares residual histories and iterates. `rhs` is
/// projected onto the range of the operator first.
pub fn verify_equivalence(
    op: &ProjectedAugmentedOp<'_>,
    rhs: &DVector<f64>,
    rtol: f64,
    cap: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    let reduced = assemble_reduced_op_seeded(op, cap, seed)?;
    let rhs = op.project(rhs);
    let rnorm = rhs.norm();
    if rnorm == 0.0 {
        return Err(Error::InvalidConfig("right-hand side vanishes after projection".into()));
    }
    let rhs_reduced = reduced.restrict(&rhs);
    let solver = |dim: usize| Minres::new(rtol, dim).record_iterates(true);
    let full = solver(reduced.matrix.nrows()).solve(op, &rhs)?;
    let red = solver(reduced.matrix.nrows()).solve(&reduced.matrix, &rhs_reduced)?;
    let compared = full.residual_history.len().min(red.residual_history.len());
    let history_gap = full.residual_history[..compared]
        .iter()
        .zip(&red.residual_history[..compared])
        .map(|(a, b)| (a - b).abs() / rnorm)
        .fold(0.0, f64::max);
    let wf = full.iterates.as_ref().unwrap();
    let wr = red.iterates.as_ref().unwrap();
    let scale = wf.iter().map(|w| w.norm()).fold(f64::MIN_POSITIVE, f64::max);
    let reconstruction_gap = wf
        .iter()
        .zip(wr)
        .map(|(w, z)| (w - reduced.extend(z)).norm() / scale)
        .fold(0.0, f64::max);
    Ok(EquivalenceReport {
        iterations_projected: full.iterations,
        iterations_reduced: red.iterations,
        compared,
        history_gap,
        reconstruction_gap,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RtailReport {
    pub residual_norm: f64,
    pub tail_norm: f64,
    /// `‖r_tail‖ / ‖r‖²`.
    pub ratio: f64,
    /// `‖(s, t)‖` of the exact standard correction.
    pub correction_norm: f64,
}

/// Solves the standard correction equation for the first selected Ritz
/// triplet exactly (dense pseudo-inverse on the reduced system) and forms
/// the tail `[R₁ Ṽ′ᵀ t; R₂ Ũ′ᵀ s]` built from the other selected triplets.
pub fn rtail_probe(
    a: Oriented<'_>,
    ritz: &RitzSet,
    selected: &[usize],
    tau: f64,
    cap: usize,
) -> Result<RtailReport> {
    let Some((&first, rest)) = selected.split_first() else {
        return Err(Error::InvalidConfig("empty selection".into()));
    };
    let (m, n) = (a.nrows(), a.ncols());
    let up = ritz.u.columns(first, 1).into_owned();
    let vp = ritz.v.columns(first, 1).into_owned();
    let op = ProjectedAugmentedOp::new(a, tau, up, vp)?;
    let reduced = assemble_reduced_op_seeded(&op, cap, 0x7a11)?;
    let r = concat(
        &ritz.res_upper.column(first).into_owned(),
        &ritz.res_lower.column(first).into_owned(),
    );
    let rhs = reduced.restrict(&(-&r));
    let scale = reduced.matrix.amax().max(f64::MIN_POSITIVE);
    let z = reduced
        .matrix
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-13 * scale)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let w = reduced.extend(&z);
    let s = w.rows(0, m);
    let t = w.rows(m, n);
    let mut tail = DVector::zeros(m + n);
    for &i in rest {
        let ut_s = ritz.u.column(i).dot(&s);
        let vt_t = ritz.v.column(i).dot(&t);
        tail.rows_mut(0, m).axpy(vt_t, &ritz.res_upper.column(i), 1.0);
        tail.rows_mut(m, n).axpy(ut_s, &ritz.res_lower.column(i), 1.0);
    }
    let rn = r.norm();
    let tn = tail.norm();
    Ok(RtailReport {
        residual_norm: rn,
        tail_norm: tn,
        ratio: tn / (rn * rn),
        correction_norm: w.norm(),
    })
}

/// Probes the tail along subspaces `orth(U_k + εG)`, `orth(V_k + εG′)` with
/// `ε` halved at every step, `m` nearest Ritz triplets selected.
pub fn rtail_sequence(
    planted: &PlantedSvd,
    tau: f64,
    m: usize,
    eps0: f64,
    steps: usize,
    seed: u64,
    cap: usize,
) -> Result<Vec<RtailReport>> {
    let (u, v) = planted.singular_block(tau, m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gu = gaussian(u.nrows(), m, &mut rng);
    let gv = gaussian(v.nrows(), m, &mut rng);
    let a = planted.matrix.as_oriented();
    let selected: Vec<usize> = (0..m).collect();
    let mut eps = eps0;
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let uu = (&u + &gu * eps).qr().q();
        let vv = (&v + &gv * eps).qr().q();
        let sub = SubspacePair::from_bases(a, uu, vv)?;
        let ritz = extract_ritz(&sub, tau)?;
        out.push(rtail_probe(a, &ritz, &selected, tau, cap)?);
        eps *= 0.5;
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationCheck {
    pub m: usize,
    pub angles: AngleReport,
    pub delta: f64,
    /// Largest deviation between sorted eigenvalues.
    pub max_shift: f64,
}

/// Compares the reduced operators of the exact `m`-dimensional singular
/// subspaces and of rotated ones.
pub fn eigen_perturbation(
    planted: &PlantedSvd,
    tau: f64,
    m: usize,
    angle_u: f64,
    angle_v: f64,
    seed: u64,
    cap: usize,
) -> Result<PerturbationCheck> {
    let a = planted.matrix.as_oriented();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (u, v) = planted.singular_block(tau, m);
    let (pu, pv) = planted.perturbed_block(tau, m, angle_u, angle_v, &mut rng)?;
    let angles = subspace_angles(&pu, &u, &pv, &v)?;
    let exact = ProjectedAugmentedOp::new(a, tau, u, v)?;
    let pert = ProjectedAugmentedOp::new(a, tau, pu, pv)?;
    let e1 = assemble_reduced_op_seeded(&exact, cap, seed ^ 1)?.eigenvalues();
    let e2 = assemble_reduced_op_seeded(&pert, cap, seed ^ 2)?.eigenvalues();
    let max_shift = e1.iter().zip(&e2).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(PerturbationCheck {
        m,
        angles,
        delta: angles.delta(planted.norm()),
        max_shift,
    })
}

/// Random orthonormal `rows × cols` block.
pub(crate) fn random_block(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    if cols == 0 {
        return DMatrix::zeros(rows, 0);
    }
    gaussian(rows, cols, rng).qr().q()
}
