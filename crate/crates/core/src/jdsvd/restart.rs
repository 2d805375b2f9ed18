//! Thick restart and purgation. Both keep a subset of Ritz triplets, so the
//! new projection matrix is diagonal and no products with `A` are needed.

use nalgebra::DMatrix;

use crate::jdsvd::ritz::RitzSet;
use crate::jdsvd::subspace::SubspacePair;

/// Restarting dimension `max(k_min, m̃)`, limited to `cap`.
pub fn restart_dim(k_min: usize, m_tilde: usize, cap: usize) -> usize {
    k_min.max(m_tilde).min(cap)
}

/// Keeps the `k_min` nearest triplets when `m̃ ≤ k_min`, otherwise exactly the
/// selected ones. At most `cap` triplets survive (the selection is ordered
/// by distance to the target, so the farthest are dropped first).
pub fn thick_restart(ritz: &RitzSet, selected: &[usize], k_min: usize, cap: usize) -> SubspacePair {
    let keep: Vec<usize> = if selected.len() <= k_min {
        (0..k_min.min(ritz.len()).min(cap)).collect()
    } else {
        selected.iter().copied().take(cap).collect()
    };
    keep_triplets(ritz, &keep)
}

/// Drops the first (just converged) triplet and keeps the others.
pub fn purge(ritz: &RitzSet) -> SubspacePair {
    let keep: Vec<usize> = (1..ritz.len()).collect();
    keep_triplets(ritz, &keep)
}

fn keep_triplets(ritz: &RitzSet, keep: &[usize]) -> SubspacePair {
    let h = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        keep.len(),
        keep.iter().map(|&i| ritz.theta[i]),
    ));
    SubspacePair::from_parts(
        ritz.u.select_columns(keep),
        ritz.v.select_columns(keep),
        h,
        ritz.av.select_columns(keep),
        ritz.atu.select_columns(keep),
    )
}
