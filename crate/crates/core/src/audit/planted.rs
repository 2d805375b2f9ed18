//! Test problems with a prescribed SVD, and subspaces at a prescribed angle
//! from exact singular subspaces.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::audit::spectrum::OracleSpectrum;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// `A = U diag(σ) Vᵀ` with random orthonormal `U` (`M × N`) and orthogonal `V`.
#[derive(Debug, Clone)]
pub struct PlantedSvd {
    pub matrix: SparseMatrix,
    /// In the column order of `u` and `v`.
    pub sigma: Vec<f64>,
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

pub(crate) fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let x: f64 = StandardNormal.sample(rng);
        x
    })
}

fn orthonormal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    gaussian(rows, cols, rng).qr().q()
}

/// Builds an `m × n` matrix (`m ≥ n`) with singular values `sigma`.
pub fn planted_svd(m: usize, n: usize, sigma: &[f64], seed: u64) -> Result<PlantedSvd> {
    if m < n || n == 0 {
        return Err(Error::InvalidConfig(format!("planted shape {m}x{n} needs m >= n >= 1")));
    }
    if sigma.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: sigma.len(),
        });
    }
    if sigma.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::NonFinite("singular values"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = orthonormal(m, n, &mut rng);
    let v = orthonormal(n, n, &mut rng);
    let mut us = u.clone();
    for (j, s) in sigma.iter().enumerate() {
        us.column_mut(j).scale_mut(*s);
    }
    let dense = us * v.transpose();
    Ok(PlantedSvd {
        matrix: SparseMatrix::from_dense(&dense)?,
        sigma: sigma.to_vec(),
        u,
        v,
    })
}

impl PlantedSvd {
    pub fn shape(&self) -> (usize, usize) {
        self.matrix.shape()
    }

    pub fn norm(&self) -> f64 {
        self.sigma.iter().copied().fold(0.0, f64::max)
    }

    pub fn spectrum(&self, tau: f64) -> Result<OracleSpectrum> {
        let (m, n) = self.shape();
        OracleSpectrum::new(&self.sigma, m, n, tau)
    }

    /// Column indices of the `k` values nearest `tau`.
    pub fn nearest(&self, tau: f64, k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.sigma.len()).collect();
        idx.sort_by(|&a, &b| crate::dense::cmp_distance(self.sigma[a], self.sigma[b], tau));
        idx.truncate(k);
        idx
    }

    /// Exact left and right singular vectors of the `k` values nearest `tau`.
    pub fn singular_block(&self, tau: f64, k: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        let idx = self.nearest(tau, k);
        (self.u.select_columns(&idx), self.v.select_columns(&idx))
    }

    /// The same block with every column rotated by `angle_u` (left) and
    /// `angle_v` (right) toward random directions orthogonal to the block, so
    /// all principal angles to the exact subspaces equal the given angles.
    pub fn perturbed_block(
        &self,
        tau: f64,
        k: usize,
        angle_u: f64,
        angle_v: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let (u, v) = self.singular_block(tau, k);
        Ok((rotate(&u, angle_u, rng)?, rotate(&v, angle_v, rng)?))
    }
}

/// `Q cos a + W sin a` with `W` orthonormal and orthogonal to `Q`.
pub fn rotate(q: &DMatrix<f64>, angle: f64, rng: &mut ChaCha8Rng) -> Result<DMatrix<f64>> {
    let (n, k) = q.shape();
    if 2 * k > n {
        return Err(Error::InvalidConfig(format!(
            "cannot rotate {k} columns within dimension {n}"
        )));
    }
    let mut w = gaussian(n, k, rng);
    for _ in 0..2 {
        let c = q.tr_mul(&w);
        w -= q * c;
    }
    let w = w.qr().q();
    Ok(q * angle.cos() + w * angle.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{jacobi_svd, orthonormality_defect};

    #[test]
    fn planted_values_are_recovered() {
        let sigma = [3.0, 0.5, 2.0, 1.0, 0.0];
        let p = planted_svd(8, 5, &sigma, 4).unwrap();
        let svd = jacobi_svd(&p.matrix.to_dense()).unwrap();
        let mut want = sigma.to_vec();
        want.sort_by(f64::total_cmp);
        let mut got = svd.sigma.clone();
        got.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "{got:?}");
        }
        assert!(orthonormality_defect(&p.u) < 1e-13);
        assert_eq!(p.nearest(0.9, 2), vec![3, 1]);
        let (u, v) = p.singular_block(0.9, 2);
        let d = p.matrix.to_dense();
        assert!((&d * &v - &u * DMatrix::from_diagonal(&nalgebra::dvector![1.0, 0.5])).amax() < 1e-13);
        assert_eq!(p.matrix.mv_count(), 0);
    }

    #[test]
    fn rotation_sets_every_principal_angle() {
        let p = planted_svd(12, 9, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0], 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (u, _) = p.singular_block(4.2, 3);
        let (pu, pv) = p.perturbed_block(4.2, 3, 0.1, 0.2, &mut rng).unwrap();
        assert!(orthonormality_defect(&pu) < 1e-13);
        assert!(orthonormality_defect(&pv) < 1e-13);
        let cosines = u.tr_mul(&pu).singular_values();
        for c in cosines.iter() {
            assert!((c - 0.1f64.cos()).abs() < 1e-13);
        }
        assert!(rotate(&u, 0.1, &mut rng).is_ok());
        assert!(rotate(&DMatrix::identity(4, 3), 0.1, &mut rng).is_err());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(planted_svd(3, 4, &[1.0; 4], 0).is_err());
        assert!(planted_svd(4, 3, &[1.0; 2], 0).is_err());
        assert!(planted_svd(4, 3, &[1.0, f64::NAN, 1.0], 0).is_err());
    }
}
