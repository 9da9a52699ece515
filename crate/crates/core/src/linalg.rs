//! Dense power-iteration helpers used for operator norms and eigenvalue
//! bounds of seeded instance data. Deterministic: the start vector comes
//! from a fixed-seed generator.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

const START_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

fn start_vector(n: usize) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let norm = v.norm();
    if norm > 0.0 {
        v /= norm;
    } else {
        v[0] = 1.0;
    }
    v
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix via
/// Rayleigh-quotient power iteration.
pub(crate) fn dominant_eigenvalue_sym(
    m: &DMatrix<f64>,
    rel_tol: f64,
    max_iter: usize,
) -> Result<f64> {
    assert!(m.is_square());
    let mut v = start_vector(m.nrows());
    let mut estimate = 0.0_f64;
    for _ in 0..max_iter {
        let w = m * &v;
        let norm_w = w.norm();
        if norm_w == 0.0 {
            return Ok(0.0);
        }
        let next = v.dot(&w);
        let converged = (next - estimate).abs() <= rel_tol * next.abs().max(f64::MIN_POSITIVE);
        estimate = next;
        v = w / norm_w;
        if converged {
            return Ok(estimate);
        }
    }
    Err(Error::PowerIteration { max_iter, estimate })
}

/// Smallest eigenvalue of a symmetric matrix, obtained by shifting:
/// `lambda_min(S) = c - lambda_max(c I - S)` with `c = lambda_max(S)`.
pub(crate) fn min_eigenvalue_sym(m: &DMatrix<f64>, rel_tol: f64, max_iter: usize) -> Result<f64> {
    let c = dominant_eigenvalue_sym(m, rel_tol, max_iter)?.max(0.0);
    let shifted = DMatrix::identity(m.nrows(), m.ncols()) * c - m;
    let top = dominant_eigenvalue_sym(&shifted, rel_tol, max_iter)?;
    Ok(c - top)
}

/// Spectral norm of a (possibly rectangular) matrix: the square root of the
/// dominant eigenvalue of `AᵀA`.
pub(crate) fn operator_norm(a: &DMatrix<f64>, rel_tol: f64, max_iter: usize) -> Result<f64> {
    let gram = a.transpose() * a;
    Ok(dominant_eigenvalue_sym(&gram, rel_tol, max_iter)?
        .max(0.0)
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form top eigenvalue of a symmetric 2x2 matrix.
    fn eig_max_2x2(a: f64, b: f64, c: f64) -> f64 {
        0.5 * (a + c) + (0.25 * (a - c) * (a - c) + b * b).sqrt()
    }

    #[test]
    fn diagonal_matrix_dominant_eigenvalue() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let lam = dominant_eigenvalue_sym(&m, 1e-13, 10_000).unwrap();
        assert!((lam - 4.0).abs() < 1e-10, "lam = {lam}");
    }

    #[test]
    fn matches_2x2_closed_form() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.7, 0.7, 1.1]);
        let lam = dominant_eigenvalue_sym(&m, 1e-13, 10_000).unwrap();
        assert!((lam - eig_max_2x2(2.0, 0.7, 1.1)).abs() < 1e-10);
    }

    #[test]
    fn operator_norm_of_rectangular() {
        // A = [[1,0],[0,2],[0,0]]: singular values {1, 2}.
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        let n = operator_norm(&a, 1e-13, 10_000).unwrap();
        assert!((n - 2.0).abs() < 1e-10);
    }

    #[test]
    fn min_eigenvalue_of_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]); // eigs {3, -1}
        let lo = min_eigenvalue_sym(&m, 1e-13, 10_000).unwrap();
        assert!((lo - (-1.0)).abs() < 1e-9, "lo = {lo}");
    }

    #[test]
    fn zero_matrix_is_zero() {
        let m = DMatrix::zeros(3, 3);
        assert_eq!(dominant_eigenvalue_sym(&m, 1e-13, 100).unwrap(), 0.0);
    }
}
