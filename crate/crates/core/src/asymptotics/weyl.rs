use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dualpca::eigendecompose;
use crate::error::{Error, Result};

/// Largest matrix size accepted by [`weyl_check`].
const MAX_SIZE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylReport {
    pub passed: bool,
    /// Largest amount by which any bound is exceeded (0 if none).
    pub max_violation: f64,
    pub tolerance: f64,
}

/// Checks every Weyl bound
/// `φ_{i+j-m}(A+B) ≥ φ_i(A) + φ_j(B)` and `φ_{i+j-1}(A+B) ≤ φ_i(A) + φ_j(B)`.
pub fn weyl_check(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<WeylReport> {
    let m = a.nrows();
    if a.shape() != b.shape() || a.ncols() != m {
        return Err(Error::Shape(format!(
            "need equal square matrices, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    if m == 0 || m > MAX_SIZE {
        return Err(Error::Shape(format!("size must lie in 1..={MAX_SIZE}, got {m}")));
    }
    let fa = eigendecompose(a)?.values;
    let fb = eigendecompose(b)?.values;
    let fs = eigendecompose(&(a + b))?.values;
    let spectral = |v: &[f64]| v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let tolerance = 1e-10 * (spectral(&fa) + spectral(&fb)).max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for i in 1..=m {
        for j in 1..=m {
            let sum = fa[i - 1] + fb[j - 1];
            if i + j - 1 <= m {
                worst = worst.max(fs[i + j - 2] - sum);
            }
            if i + j > m {
                worst = worst.max(sum - fs[i + j - m - 1]);
            }
        }
    }
    Ok(WeylReport {
        passed: worst <= tolerance,
        max_violation: worst,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pair() {
        let a = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 0.0]);
        let b = DMatrix::from_diagonal(&nalgebra::dvector![0.0, 1.0]);
        assert!(weyl_check(&a, &b).unwrap().passed);
    }

    #[test]
    fn identity_pair_is_tight() {
        let i = DMatrix::<f64>::identity(2, 2);
        let r = weyl_check(&i, &i).unwrap();
        assert!(r.passed);
        assert_eq!(r.max_violation, 0.0);
    }

    #[test]
    fn shape_mismatch() {
        let a = DMatrix::<f64>::identity(2, 2);
        let b = DMatrix::<f64>::identity(3, 3);
        assert!(matches!(weyl_check(&a, &b), Err(Error::Shape(_))));
    }
}
