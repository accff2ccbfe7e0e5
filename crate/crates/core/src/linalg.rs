//! Minimal dense linear algebra for the Gaussian machinery.
//!
//! The matrices here are small (flattened series dimension squared), so a
//! textbook Cholesky plus triangular solves is all that is needed.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinalgError {
    /// The matrix is not (numerically) symmetric positive definite.
    NotPositiveDefinite { pivot: usize },
    /// Row-major data does not form an n × n matrix.
    NotSquare { len: usize, n: usize },
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::NotPositiveDefinite { pivot } => {
                write!(f, "matrix is not positive definite (pivot {pivot})")
            }
            LinalgError::NotSquare { len, n } => {
                write!(f, "{len} entries cannot form a {n}x{n} matrix")
            }
        }
    }
}

impl core::error::Error for LinalgError {}

/// Lower-triangular Cholesky factor L with A = L·Lᵀ, row-major.
pub fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>, LinalgError> {
    if a.len() != n * n {
        return Err(LinalgError::NotSquare { len: a.len(), n });
    }
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !sum.is_finite() || sum <= 0.0 {
                    return Err(LinalgError::NotPositiveDefinite { pivot: i });
                }
                l[i * n + j] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solves A·x = b in place given the Cholesky factor of A.
pub fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    debug_assert_eq!(l.len(), n * n);
    debug_assert_eq!(b.len(), n);
    // forward: L y = b
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * b[k];
        }
        b[i] = sum / l[i * n + i];
    }
    // backward: L^T x = y
    for i in (0..n).rev() {
        let mut sum = b[i];
        for k in i + 1..n {
            sum -= l[k * n + i] * b[k];
        }
        b[i] = sum / l[i * n + i];
    }
}

/// Dense row-major matrix-vector product y = A·x.
pub fn mat_vec(a: &[f64], n: usize, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(a.len(), n * n);
    for (i, out) in y.iter_mut().enumerate() {
        let row = &a[i * n..(i + 1) * n];
        *out = row.iter().zip(x).map(|(&m, &v)| m * v).sum();
    }
}

/// y = L·x for a lower-triangular row-major L.
pub fn lower_tri_vec(l: &[f64], n: usize, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(l.len(), n * n);
    for i in 0..n {
        let row = &l[i * n..i * n + i + 1];
        y[i] = row.iter().zip(x).map(|(&m, &v)| m * v).sum();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_and_solve_roundtrip() {
        // A = [[4, 2], [2, 3]]
        let a = [4.0, 2.0, 2.0, 3.0];
        let l = cholesky(&a, 2).unwrap();
        // L = [[2, 0], [1, sqrt(2)]]
        assert!((l[0] - 2.0).abs() < 1e-15);
        assert!((l[2] - 1.0).abs() < 1e-15);
        assert!((l[3] - 2f64.sqrt()).abs() < 1e-15);

        let mut b = [2.0, -1.0];
        cholesky_solve(&l, 2, &mut b);
        // check A x = b
        let ax = [4.0 * b[0] + 2.0 * b[1], 2.0 * b[0] + 3.0 * b[1]];
        assert!((ax[0] - 2.0).abs() < 1e-12);
        assert!((ax[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_indefinite() {
        let a = [1.0, 2.0, 2.0, 1.0]; // eigenvalues 3, -1
        assert_eq!(
            cholesky(&a, 2),
            Err(LinalgError::NotPositiveDefinite { pivot: 1 })
        );
    }

    #[test]
    fn rejects_non_square_data() {
        assert!(matches!(
            cholesky(&[1.0, 2.0, 3.0], 2),
            Err(LinalgError::NotSquare { .. })
        ));
    }
}
