//! Largest principal angles between approximate and exact subspaces.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dense::orthonormality_defect;
use crate::error::{Error, Result};
use crate::operator::ORTHONORMAL_TOL;

/// `‖sin Φ‖` and `‖sin Ψ‖` for the left and right subspaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngleReport {
    pub sin_phi: f64,
    pub sin_psi: f64,
}

impl AngleReport {
    /// Perturbation radius `‖A‖(‖sin Φ‖ + ‖sin Ψ‖)²`.
    pub fn delta(&self, norm_a: f64) -> f64 {
        norm_a * (self.sin_phi + self.sin_psi).powi(2)
    }
}

/// Sine of the largest principal angle, `‖(I − QQᵀ)Q̃‖₂`.
pub fn sine_distance(approx: &DMatrix<f64>, exact: &DMatrix<f64>) -> Result<f64> {
    if approx.shape() != exact.shape() {
        return Err(Error::DimensionMismatch {
            expected: exact.ncols(),
            found: approx.ncols(),
        });
    }
    for q in [approx, exact] {
        let dev = orthonormality_defect(q);
        if dev > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { deviation: dev });
        }
    }
    if approx.ncols() == 0 {
        return Ok(0.0);
    }
    let resid = approx - exact * exact.tr_mul(approx);
    Ok(resid.singular_values().max().min(1.0))
}

pub fn subspace_angles(
    approx_u: &DMatrix<f64>,
    exact_u: &DMatrix<f64>,
    approx_v: &DMatrix<f64>,
    exact_v: &DMatrix<f64>,
) -> Result<AngleReport> {
    Ok(AngleReport {
        sin_phi: sine_distance(approx_u, exact_u)?,
        sin_psi: sine_distance(approx_v, exact_v)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_rotation() {
        let a: f64 = 0.3;
        let exact = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let approx = DMatrix::from_column_slice(3, 1, &[a.cos(), a.sin(), 0.0]);
        let s = sine_distance(&approx, &exact).unwrap();
        assert!((s - a.sin()).abs() < 1e-15);
        let r = subspace_angles(&approx, &exact, &exact, &exact).unwrap();
        assert!(r.sin_psi < 1e-15);
        assert!((r.delta(2.0) - 2.0 * a.sin().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn same_subspace_different_basis() {
        let exact = DMatrix::<f64>::identity(4, 2);
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let approx = DMatrix::from_column_slice(4, 2, &[c, c, 0.0, 0.0, c, -c, 0.0, 0.0]);
        assert!(sine_distance(&approx, &exact).unwrap() < 1e-15);
    }

    #[test]
    fn rejects_non_orthonormal() {
        let exact = DMatrix::<f64>::identity(4, 1);
        let bad = DMatrix::from_column_slice(4, 1, &[2.0, 0.0, 0.0, 0.0]);
        assert!(matches!(sine_distance(&bad, &exact), Err(Error::NotOrthonormal { .. })));
        assert!(sine_distance(&DMatrix::identity(4, 2), &exact).is_err());
    }
}
