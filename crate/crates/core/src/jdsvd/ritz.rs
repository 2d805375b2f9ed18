//! Standard extraction: Ritz triplets of the projection matrix and their
//! residuals.

use nalgebra::{DMatrix, DVector};

use crate::dense::small_svd;
use crate::error::Result;
use crate::jdsvd::subspace::SubspacePair;
use crate::operator::concat;

/// Approximate singular triplets `(θᵢ, ũᵢ, ṽᵢ)` ordered by `|θᵢ − τ|`.
#[derive(Debug, Clone)]
pub struct RitzSet {
    pub theta: Vec<f64>,
    /// `Ũ C`; column `i` is `ũᵢ`.
    pub u: DMatrix<f64>,
    /// `Ṽ D`; column `i` is `ṽᵢ`.
    pub v: DMatrix<f64>,
    /// Column `i` is `Aṽᵢ`.
    pub av: DMatrix<f64>,
    /// Column `i` is `Aᵀũᵢ`.
    pub atu: DMatrix<f64>,
    /// Column `i` is `Aṽᵢ − θᵢũᵢ`.
    pub res_upper: DMatrix<f64>,
    /// Column `i` is `Aᵀũᵢ − θᵢṽᵢ`.
    pub res_lower: DMatrix<f64>,
    pub res_norms: Vec<f64>,
}

impl RitzSet {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// The stacked residual `r⁽ⁱ⁾`.
    pub fn residual(&self, i: usize) -> DVector<f64> {
        concat(
            &self.res_upper.column(i).into_owned(),
            &self.res_lower.column(i).into_owned(),
        )
    }
}

/// Extracts the Ritz triplets of `sub` with respect to the target `tau`.
/// Uses only the cached products of `sub`.
pub fn extract_ritz(sub: &SubspacePair, tau: f64) -> Result<RitzSet> {
    let svd = small_svd(&sub.h, tau)?;
    let u = &sub.u * &svd.left;
    let v = &sub.v * &svd.right;
    let av = &sub.av * &svd.right;
    let atu = &sub.atu * &svd.left;
    let mut res_upper = av.clone();
    let mut res_lower = atu.clone();
    let mut res_norms = Vec::with_capacity(svd.len());
    for (i, &theta) in svd.theta.iter().enumerate() {
        res_upper.column_mut(i).axpy(-theta, &u.column(i), 1.0);
        res_lower.column_mut(i).axpy(-theta, &v.column(i), 1.0);
        let nu = res_upper.column(i).norm_squared();
        let nl = res_lower.column(i).norm_squared();
        res_norms.push((nu + nl).sqrt());
    }
    Ok(RitzSet {
        theta: svd.theta,
        u,
        v,
        av,
        atu,
        res_upper,
        res_lower,
        res_norms,
    })
}

/// Outer convergence test `‖r‖ ≤ ‖A‖_e · tol`.
pub fn check_convergence(rnorm: f64, norme: f64, tol: f64) -> bool {
    rnorm <= norme * tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::jacobi_svd;
    use crate::sparse::SparseMatrix;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_space_extraction_is_exact() {
        let a = SparseMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let id = DMatrix::identity(3, 3);
        let sub = SubspacePair::from_bases(a.as_oriented(), id.clone(), id).unwrap();
        let ritz = extract_ritz(&sub, 1.9).unwrap();
        assert_eq!(ritz.theta, vec![2.0, 1.0, 3.0]);
        assert!(ritz.res_norms.iter().all(|&r| r == 0.0));
        assert_eq!(ritz.u.column(0).iamax(), 1);
    }

    #[test]
    fn exact_single_triplet() {
        let a = SparseMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let e = DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0]);
        let sub = SubspacePair::from_bases(a.as_oriented(), e.clone(), e).unwrap();
        let ritz = extract_ritz(&sub, 0.0).unwrap();
        assert_eq!(ritz.theta, vec![3.0]);
        assert_eq!(ritz.res_norms[0], 0.0);
    }

    #[test]
    fn matches_dense_svd_of_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let d = DMatrix::from_fn(20, 15, |_, _| rng.random_range(-1.0..1.0));
        let a = SparseMatrix::from_dense(&d).unwrap();
        let u = DMatrix::from_fn(20, 2, |_, _| rng.random_range(-1.0..1.0)).qr().q();
        let v = DMatrix::from_fn(15, 2, |_, _| rng.random_range(-1.0..1.0)).qr().q();
        let sub = SubspacePair::from_bases(a.as_oriented(), u.clone(), v.clone()).unwrap();
        let ritz = extract_ritz(&sub, 0.3).unwrap();

        let h = u.transpose() * &d * &v;
        let oracle = h.clone().svd(true, true);
        let mut sv: Vec<f64> = oracle.singular_values.iter().copied().collect();
        sv.sort_by(|x, y| (x - 0.3).abs().total_cmp(&(y - 0.3).abs()));
        for (t, s) in ritz.theta.iter().zip(&sv) {
            assert!((t - s).abs() < 1e-12);
        }
        for i in 0..2 {
            let ui = ritz.u.column(i);
            let vi = ritz.v.column(i);
            // H dᵢ = θᵢ cᵢ in the small space
            let c = u.tr_mul(&ui);
            let dd = v.tr_mul(&vi);
            assert!((&h * &dd - &c * ritz.theta[i]).norm() < 1e-12);
            let r = DVector::from_iterator(
                35,
                (&d * vi - ui * ritz.theta[i])
                    .iter()
                    .chain((d.transpose() * ui - vi * ritz.theta[i]).iter())
                    .copied(),
            );
            assert!((r.norm() - ritz.res_norms[i]).abs() < 1e-12);
            // double orthogonality
            let norme = a.norm_estimates().norme;
            assert!(ui.dot(&ritz.res_upper.column(i)).abs() <= 1e-10 * norme);
            assert!(vi.dot(&ritz.res_lower.column(i)).abs() <= 1e-10 * norme);
        }
        let _ = jacobi_svd(&h).unwrap();
    }

    #[test]
    fn convergence_threshold() {
        assert!(check_convergence(0.0, 123.0, 1e-8));
        assert!(!check_convergence(1e-7, 1.0, 1e-8));
        assert!(check_convergence(9.9e-9, 1.0, 1e-8));
    }
}
