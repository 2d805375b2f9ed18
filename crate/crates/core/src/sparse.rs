//! Compressed sparse row storage for the matrix whose partial SVD is sought.
//!
//! Every product with `A` or `Aᵀ` goes through [`SparseMatrix::apply`] or
//! [`SparseMatrix::apply_transpose`] and bumps the handle's matrix-vector
//! tally by one. The tally is an atomic counter, so a matrix can be shared
//! between threads for reading; counts from concurrent products are never
//! lost. Dense conversions used by the audit oracles do not touch it.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Real sparse matrix in CSR layout with a matrix-vector product tally.
#[derive(Debug)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    mv_counter: AtomicU64,
}

impl Clone for SparseMatrix {
    fn clone(&self) -> Self {
        Self {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values: self.values.clone(),
            mv_counter: AtomicU64::new(self.mv_count()),
        }
    }
}

/// Cheap norm estimates of `A`: `‖A‖₁`, `‖A‖_∞` and their geometric mean `‖A‖_e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimates {
    pub norm1: f64,
    pub norminf: f64,
    pub norme: f64,
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, checking every structural invariant.
    pub fn from_csr(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if indptr.len() != nrows + 1 {
            return Err(Error::InvalidMatrix(format!(
                "row offset array has length {}, expected {}",
                indptr.len(),
                nrows + 1
            )));
        }
        if indptr[0] != 0 || indptr[nrows] != indices.len() || indices.len() != values.len() {
            return Err(Error::InvalidMatrix(
                "row offsets do not match the entry arrays".into(),
            ));
        }
        for row in 0..nrows {
            let (lo, hi) = (indptr[row], indptr[row + 1]);
            if lo > hi {
                return Err(Error::InvalidMatrix(format!(
                    "row offsets decrease at row {row}"
                )));
            }
            let cols = &indices[lo..hi];
            if cols.iter().any(|&c| c >= ncols) {
                return Err(Error::InvalidMatrix(format!(
                    "column index out of range in row {row}"
                )));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidMatrix(format!(
                    "column indices not strictly increasing in row {row}"
                )));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
            mv_counter: AtomicU64::new(0),
        })
    }

    /// Builds a matrix from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(i, j, v) in &entries {
            if i >= nrows || j >= ncols {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({i}, {j}) outside a {nrows}x{ncols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("matrix entries"));
            }
        }
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));

        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indices.push(j);
            values.push(v);
            indptr[i + 1] += 1;
            last = Some((i, j));
        }
        for row in 0..nrows {
            indptr[row + 1] += indptr[row];
        }
        Self::from_csr(nrows, ncols, indptr, indices, values)
    }

    /// Converts a dense matrix, keeping only the nonzero entries.
    pub fn from_dense(dense: &DMatrix<f64>) -> Result<Self> {
        let (m, n) = dense.shape();
        let triplets = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter_map(|(i, j)| {
                let v = dense[(i, j)];
                (v != 0.0).then_some((i, j, v))
            });
        Self::from_triplets(m, n, triplets)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_triplets(n, n, diag.iter().enumerate().map(|(i, &d)| (i, i, d)))
            .expect("diagonal entries must be finite")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of products with `A` or `Aᵀ` performed through this handle.
    pub fn mv_count(&self) -> u64 {
        self.mv_counter.load(Ordering::Relaxed)
    }

    pub fn reset_mv_count(&self) {
        self.mv_counter.store(0, Ordering::Relaxed);
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                found: x.len(),
            });
        }
        let mut y = DVector::zeros(self.nrows);
        self.apply_into(x, y.as_mut_slice());
        Ok(y)
    }

    /// `x = Aᵀ y`.
    pub fn apply_transpose(&self, y: &[f64]) -> Result<DVector<f64>> {
        if y.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                found: y.len(),
            });
        }
        let mut x = DVector::zeros(self.ncols);
        self.apply_transpose_into(y, x.as_mut_slice());
        Ok(x)
    }

    /// Unchecked-length variant of [`apply`](Self::apply) writing into `out`.
    pub(crate) fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(out.len(), self.nrows);
        self.mv_counter.fetch_add(1, Ordering::Relaxed);
        for (row, yi) in out.iter_mut().enumerate() {
            let (lo, hi) = (self.indptr[row], self.indptr[row + 1]);
            *yi = self.indices[lo..hi]
                .iter()
                .zip(&self.values[lo..hi])
                .map(|(&j, &a)| a * x[j])
                .sum();
        }
    }

    pub(crate) fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.nrows);
        debug_assert_eq!(out.len(), self.ncols);
        self.mv_counter.fetch_add(1, Ordering::Relaxed);
        out.fill(0.0);
        for (row, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            let (lo, hi) = (self.indptr[row], self.indptr[row + 1]);
            for (&j, &a) in self.indices[lo..hi].iter().zip(&self.values[lo..hi]) {
                out[j] += a * yi;
            }
        }
    }

    /// `‖A‖₁` (max column sum), `‖A‖_∞` (max row sum) and `‖A‖_e = √(‖A‖₁‖A‖_∞)`.
    pub fn norm_estimates(&self) -> NormEstimates {
        let mut col_sums = vec![0.0; self.ncols];
        let mut norminf: f64 = 0.0;
        for row in 0..self.nrows {
            let (lo, hi) = (self.indptr[row], self.indptr[row + 1]);
            let mut row_sum = 0.0;
            for (&j, &a) in self.indices[lo..hi].iter().zip(&self.values[lo..hi]) {
                row_sum += a.abs();
                col_sums[j] += a.abs();
            }
            norminf = norminf.max(row_sum);
        }
        let norm1 = col_sums.into_iter().fold(0.0, f64::max);
        NormEstimates {
            norm1,
            norminf,
            norme: (norm1 * norminf).sqrt(),
        }
    }

    /// Dense copy of `A`. Does not count as a product.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut dense = DMatrix::zeros(self.nrows, self.ncols);
        for row in 0..self.nrows {
            for k in self.indptr[row]..self.indptr[row + 1] {
                dense[(row, self.indices[k])] = self.values[k];
            }
        }
        dense
    }
}

/// `A` or `Aᵀ` seen through the same handle, so products in either
/// orientation land on one tally.
#[derive(Debug, Clone, Copy)]
pub struct Oriented<'a> {
    matrix: &'a SparseMatrix,
    transposed: bool,
}

impl<'a> Oriented<'a> {
    pub fn new(matrix: &'a SparseMatrix, transposed: bool) -> Self {
        Self { matrix, transposed }
    }

    pub fn matrix(&self) -> &'a SparseMatrix {
        self.matrix
    }

    pub fn is_transposed(&self) -> bool {
        self.transposed
    }

    pub fn nrows(&self) -> usize {
        if self.transposed {
            self.matrix.ncols
        } else {
            self.matrix.nrows
        }
    }

    pub fn ncols(&self) -> usize {
        if self.transposed {
            self.matrix.nrows
        } else {
            self.matrix.ncols
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<DVector<f64>> {
        if self.transposed {
            self.matrix.apply_transpose(x)
        } else {
            self.matrix.apply(x)
        }
    }

    pub fn apply_transpose(&self, y: &[f64]) -> Result<DVector<f64>> {
        if self.transposed {
            self.matrix.apply(y)
        } else {
            self.matrix.apply_transpose(y)
        }
    }

    pub(crate) fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        if self.transposed {
            self.matrix.apply_transpose_into(x, out)
        } else {
            self.matrix.apply_into(x, out)
        }
    }

    pub(crate) fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        if self.transposed {
            self.matrix.apply_into(y, out)
        } else {
            self.matrix.apply_transpose_into(y, out)
        }
    }

    pub fn norm_estimates(&self) -> NormEstimates {
        let est = self.matrix.norm_estimates();
        if self.transposed {
            NormEstimates {
                norm1: est.norminf,
                norminf: est.norm1,
                norme: est.norme,
            }
        } else {
            est
        }
    }

    /// Dense copy in this orientation. Not counted.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.matrix.to_dense();
        if self.transposed {
            d.transpose()
        } else {
            d
        }
    }
}

impl SparseMatrix {
    /// View of `A` in its stored orientation.
    pub fn as_oriented(&self) -> Oriented<'_> {
        Oriented::new(self, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sparse(rng: &mut ChaCha8Rng, m: usize, n: usize, density: f64) -> SparseMatrix {
        let mut trip = Vec::new();
        for i in 0..m {
            for j in 0..n {
                if rng.random::<f64>() < density {
                    trip.push((i, j, rng.random_range(-1.0..1.0)));
                }
            }
        }
        SparseMatrix::from_triplets(m, n, trip).unwrap()
    }

    fn dense_product(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
        (0..a.nrows())
            .map(|i| (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum())
            .collect()
    }

    #[test]
    fn identity_and_diagonal_products() {
        let eye = SparseMatrix::identity(3);
        assert_eq!(eye.apply(&[1.0, 2.0, 3.0]).unwrap().as_slice(), &[1.0, 2.0, 3.0]);
        assert_eq!(
            eye.apply_transpose(&[1.0, 2.0, 3.0]).unwrap().as_slice(),
            &[1.0, 2.0, 3.0]
        );
        let d = SparseMatrix::from_diagonal(&[1.0, 2.0]);
        assert_eq!(d.apply(&[1.0, 1.0]).unwrap().as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn transpose_reads_first_row() {
        let a = SparseMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]))
            .unwrap();
        assert_eq!(a.apply_transpose(&[1.0, 0.0]).unwrap().as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn products_match_dense_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(m, n) in &[(4, 3), (5, 4)] {
            let a = random_sparse(&mut rng, m, n, 0.7);
            let dense = a.to_dense();
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let ax = a.apply(&x).unwrap();
            for (got, want) in ax.iter().zip(dense_product(&dense, &x)) {
                assert_relative_eq!(*got, want, max_relative = 1e-14, epsilon = 1e-15);
            }
            let aty = a.apply_transpose(&y).unwrap();
            let dt = dense.transpose();
            for (got, want) in aty.iter().zip(dense_product(&dt, &y)) {
                assert_relative_eq!(*got, want, max_relative = 1e-14, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = SparseMatrix::identity(3);
        assert!(matches!(
            a.apply(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
        assert!(a.apply_transpose(&[1.0]).is_err());
        assert_eq!(a.mv_count(), 0);
    }

    #[test]
    fn counter_tracks_every_product() {
        let a = SparseMatrix::identity(4);
        for _ in 0..3 {
            a.apply(&[0.0; 4]).unwrap();
        }
        a.apply_transpose(&[0.0; 4]).unwrap();
        assert_eq!(a.mv_count(), 4);
        a.reset_mv_count();
        assert_eq!(a.mv_count(), 0);
    }

    #[test]
    fn counter_is_exact_under_concurrent_products() {
        let a = SparseMatrix::identity(16);
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| {
                    for _ in 0..250 {
                        a.apply(&[1.0; 16]).unwrap();
                        a.apply_transpose(&[1.0; 16]).unwrap();
                    }
                });
            }
        });
        assert_eq!(a.mv_count(), 8 * 500);
    }

    #[test]
    fn norm_estimates_examples() {
        let n = SparseMatrix::identity(5).norm_estimates();
        assert_eq!((n.norm1, n.norminf, n.norme), (1.0, 1.0, 1.0));

        let a = SparseMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]))
            .unwrap();
        let n = a.norm_estimates();
        assert_eq!(n.norm1, 6.0);
        assert_eq!(n.norminf, 7.0);
        assert_relative_eq!(n.norme, 42f64.sqrt(), max_relative = 1e-15);

        let n = SparseMatrix::from_diagonal(&[1.0, 2.0, 3.0]).norm_estimates();
        assert_eq!((n.norm1, n.norminf, n.norme), (3.0, 3.0, 3.0));

        let z = SparseMatrix::from_triplets(3, 2, std::iter::empty()).unwrap();
        assert_eq!(z.norm_estimates().norme, 0.0);
    }

    #[test]
    fn rejects_bad_csr() {
        assert!(SparseMatrix::from_csr(2, 2, vec![0, 1, 2], vec![1, 0], vec![1.0, 1.0]).is_ok());
        assert!(SparseMatrix::from_csr(2, 2, vec![0, 2, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 2, vec![0, 1], vec![2], vec![1.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 2, vec![0, 1], vec![0], vec![f64::NAN]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn adjoint_consistency(seed in any::<u64>(), m in 1usize..200, n in 1usize..150) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_sparse(&mut rng, m, n, 0.05);
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
                let ax = a.apply(&x).unwrap();
                let aty = a.apply_transpose(&y).unwrap();
                let lhs: f64 = ax.iter().zip(&y).map(|(p, q)| p * q).sum();
                let rhs: f64 = aty.iter().zip(&x).map(|(p, q)| p * q).sum();
                let scale: f64 = a.values().iter().map(|v| v.abs()).sum::<f64>().max(1.0);
                prop_assert!((lhs - rhs).abs() <= 1e-13 * scale);
            }

            #[test]
            fn norme_squares_to_product(seed in any::<u64>(), m in 1usize..40, n in 1usize..40) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let est = random_sparse(&mut rng, m, n, 0.3).norm_estimates();
                let prod = est.norm1 * est.norminf;
                prop_assert!((est.norme * est.norme - prod).abs() <= 4.0 * f64::EPSILON * prod.max(1e-300));
            }
        }
    }
}
