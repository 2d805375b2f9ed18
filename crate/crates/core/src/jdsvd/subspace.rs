//! Searching subspaces with cached products.
//!
//! Besides `Ũ`, `Ṽ` and `H = ŨᵀAṼ` the pair keeps `AṼ` and `AᵀŨ`, so Ritz
//! residuals, restarts and purges need no further products with `A`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dense::{orthonormalize_against, DEFAULT_DROP_TOL};
use crate::error::{Error, Result};
use crate::sparse::Oriented;

#[derive(Debug, Clone)]
pub struct SubspacePair {
    pub(crate) u: DMatrix<f64>,
    pub(crate) v: DMatrix<f64>,
    pub(crate) h: DMatrix<f64>,
    pub(crate) av: DMatrix<f64>,
    pub(crate) atu: DMatrix<f64>,
}

/// What happened to one side of an expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionVector {
    Accepted,
    /// The supplied direction lay in the existing span and was replaced by a
    /// random vector.
    Substituted,
}

impl SubspacePair {
    pub fn empty(m: usize, n: usize) -> Self {
        Self {
            u: DMatrix::zeros(m, 0),
            v: DMatrix::zeros(n, 0),
            h: DMatrix::zeros(0, 0),
            av: DMatrix::zeros(m, 0),
            atu: DMatrix::zeros(n, 0),
        }
    }

    /// Assembles a pair from bases whose projection matrix and cached
    /// products are already known.
    pub(crate) fn from_parts(
        u: DMatrix<f64>,
        v: DMatrix<f64>,
        h: DMatrix<f64>,
        av: DMatrix<f64>,
        atu: DMatrix<f64>,
    ) -> Self {
        debug_assert_eq!(u.ncols(), v.ncols());
        debug_assert_eq!(h.shape(), (u.ncols(), u.ncols()));
        Self { u, v, h, av, atu }
    }

    /// Builds a pair from explicit orthonormal bases, consuming `2k` products.
    pub fn from_bases(a: Oriented<'_>, u: DMatrix<f64>, v: DMatrix<f64>) -> Result<Self> {
        if u.ncols() != v.ncols() {
            return Err(Error::DimensionMismatch {
                expected: u.ncols(),
                found: v.ncols(),
            });
        }
        if u.nrows() != a.nrows() || v.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: u.nrows(),
            });
        }
        let k = u.ncols();
        let mut av = DMatrix::zeros(a.nrows(), k);
        let mut atu = DMatrix::zeros(a.ncols(), k);
        for j in 0..k {
            a.apply_into(v.column(j).as_slice(), av.column_mut(j).as_mut_slice());
            a.apply_transpose_into(u.column(j).as_slice(), atu.column_mut(j).as_mut_slice());
        }
        let h = u.tr_mul(&av);
        Ok(Self { u, v, h, av, atu })
    }

    pub fn dim(&self) -> usize {
        self.u.ncols()
    }

    pub fn left(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn right(&self) -> &DMatrix<f64> {
        &self.v
    }

    /// The projection matrix `H = ŨᵀAṼ`.
    pub fn projection(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// Appends `s̃` and `t̃` after orthonormalizing them against the deflated
    /// blocks and the current bases. Costs one product with `A` and one with
    /// `Aᵀ`.
    pub fn expand<R: Rng + ?Sized>(
        &mut self,
        a: Oriented<'_>,
        s: &DVector<f64>,
        t: &DVector<f64>,
        deflated: (&DMatrix<f64>, &DMatrix<f64>),
        rng: &mut R,
    ) -> Result<(ExpansionVector, ExpansionVector)> {
        let (m, n) = (a.nrows(), a.ncols());
        if s.len() != m || t.len() != n {
            return Err(Error::DimensionMismatch {
                expected: m + n,
                found: s.len() + t.len(),
            });
        }
        let k = self.dim();
        if deflated.0.ncols() + k >= m || deflated.1.ncols() + k >= n {
            return Err(Error::InvalidConfig(
                "searching subspace already spans the whole deflated space".into(),
            ));
        }
        let (u_plus, su) = orthonormal_or_random(s, &[deflated.0, &self.u], rng)?;
        let (v_plus, sv) = orthonormal_or_random(t, &[deflated.1, &self.v], rng)?;

        let av_plus = a.apply(v_plus.as_slice())?;
        let atu_plus = a.apply_transpose(u_plus.as_slice())?;

        self.append(&u_plus, &v_plus, av_plus, atu_plus);
        Ok((su, sv))
    }

    fn append(&mut self, u_plus: &DVector<f64>, v_plus: &DVector<f64>, av_plus: DVector<f64>, atu_plus: DVector<f64>) {
        let k = self.dim();
        let col = self.u.tr_mul(&av_plus);
        let row = atu_plus.tr_mul(&self.v);
        let corner = u_plus.dot(&av_plus);

        let mut h = DMatrix::zeros(k + 1, k + 1);
        h.view_mut((0, 0), (k, k)).copy_from(&self.h);
        h.view_mut((0, k), (k, 1)).copy_from(&col);
        h.view_mut((k, 0), (1, k)).copy_from(&row);
        h[(k, k)] = corner;

        self.h = h;
        self.u = push_column(&self.u, u_plus);
        self.v = push_column(&self.v, v_plus);
        self.av = push_column(&self.av, &av_plus);
        self.atu = push_column(&self.atu, &atu_plus);
    }

    /// Replaces `Ũ` by an orthonormal basis of `(I − U_cU_cᵀ)AṼ`.
    ///
    /// Used once `Ṽ` spans the whole complement of `V_c`: the standard
    /// extraction then becomes exact. Costs `k` products with `Aᵀ`.
    pub(crate) fn refresh_left_from_range<R: Rng + ?Sized>(
        &mut self,
        a: Oriented<'_>,
        uc: &DMatrix<f64>,
        rng: &mut R,
    ) -> Result<u64> {
        let k = self.dim();
        let mut cols: Vec<DVector<f64>> = Vec::with_capacity(k);
        for j in 0..k {
            let basis = crate::dense::stack_columns(a.nrows(), &cols);
            let (q, _) = orthonormal_or_random(&self.av.column(j).into_owned(), &[uc, &basis], rng)?;
            cols.push(q);
        }
        self.u = crate::dense::stack_columns(a.nrows(), &cols);
        let mut atu = DMatrix::zeros(a.ncols(), k);
        for j in 0..k {
            a.apply_transpose_into(self.u.column(j).as_slice(), atu.column_mut(j).as_mut_slice());
        }
        self.atu = atu;
        self.h = self.u.tr_mul(&self.av);
        Ok(k as u64)
    }

    /// Recomputes the cached products from scratch. Costs `2k` products.
    pub(crate) fn recompute_products(&mut self, a: Oriented<'_>) -> Result<u64> {
        let fresh = Self::from_bases(a, self.u.clone(), self.v.clone())?;
        *self = fresh;
        Ok(2 * self.dim() as u64)
    }

    /// `max |H − ŨᵀAṼ|` with `ŨᵀAṼ` formed from fresh products. Costs `k`
    /// products with `A`.
    pub fn projection_defect(&self, a: Oriented<'_>) -> Result<f64> {
        let mut av = DMatrix::zeros(a.nrows(), self.dim());
        for j in 0..self.dim() {
            let col = a.apply(self.v.column(j).as_slice())?;
            av.set_column(j, &col);
        }
        Ok((&self.h - self.u.tr_mul(&av)).amax())
    }
}

fn push_column(m: &DMatrix<f64>, c: &DVector<f64>) -> DMatrix<f64> {
    let k = m.ncols();
    let mut out = m.clone().insert_column(k, 0.0);
    out.set_column(k, c);
    out
}

pub(crate) fn random_unit<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    let g = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let nrm = g.norm();
    g / nrm
}

/// Orthonormalizes `x` against `blocks`; falls back to random directions when
/// `x` is (numerically) inside their span.
pub(crate) fn orthonormal_or_random<R: Rng + ?Sized>(
    x: &DVector<f64>,
    blocks: &[&DMatrix<f64>],
    rng: &mut R,
) -> Result<(DVector<f64>, ExpansionVector)> {
    if let Some(q) = orthonormalize_against(x, blocks, DEFAULT_DROP_TOL) {
        return Ok((q, ExpansionVector::Accepted));
    }
    for _ in 0..16 {
        let r = random_unit(x.len(), rng);
        if let Some(q) = orthonormalize_against(&r, blocks, DEFAULT_DROP_TOL) {
            return Ok((q, ExpansionVector::Substituted));
        }
    }
    Err(Error::RankDeficient)
}
