//! Small dense SPD helpers: Cholesky with a relative pivot threshold,
//! inversion through the factor, and symmetrization.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Pivot threshold relative to `trace / p`.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

/// Lower Cholesky factor `L` with `L Lᵀ = a`.
///
/// Every pivot (the value whose square root becomes `L[j][j]`) must exceed
/// `PIVOT_TOLERANCE · trace(a) / p`.
pub fn cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = a.nrows();
    if a.ncols() != p {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            p,
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    let scale = if p == 0 { 0.0 } else { a.trace() / p as f64 };
    let threshold = PIVOT_TOLERANCE * scale.abs();
    let mut l = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if pivot.is_nan() || pivot <= threshold || scale <= 0.0 {
            return Err(Error::DegenerateSample {
                index: j,
                pivot,
                threshold,
            });
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        for i in j + 1..p {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Inverse of an SPD matrix via its Cholesky factor, symmetrized.
pub fn spd_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = a.nrows();
    let l = cholesky(a)?;
    let l_inv = l
        .solve_lower_triangular(&DMatrix::identity(p, p))
        .ok_or(Error::DegenerateSample {
            index: 0,
            pivot: 0.0,
            threshold: 0.0,
        })?;
    Ok(symmetrize(&(l_inv.transpose() * l_inv)))
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// True when `a` is symmetric to within `rel_tol` of its largest entry.
pub fn is_symmetric(a: &DMatrix<f64>, rel_tol: f64) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let p = a.nrows();
    (0..p).all(|i| (0..i).all(|j| (a[(i, j)] - a[(j, i)]).abs() <= rel_tol * scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs_input() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0]);
        let l = cholesky(&a).unwrap();
        let back = &l * l.transpose();
        assert!((back - &a).amax() < 1e-12);
        assert_eq!(l[(0, 1)], 0.0);
    }

    #[test]
    fn singular_matrix_is_degenerate() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 2.0, 2.0, 2.0]);
        match cholesky(&a) {
            Err(Error::DegenerateSample { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected degenerate sample, got {other:?}"),
        }
    }

    #[test]
    fn inverse_residual_is_small() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0]);
        let inv = spd_inverse(&a).unwrap();
        assert!((&inv * &a - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);
        assert!(is_symmetric(&inv, 0.0));
    }
}
