use super::{ComplexMatrix, LinalgError, RANK_TOL};
use num_complex::Complex64;

/// Lower-triangular `L` with `a = L L^H` for a Hermitian positive
/// semidefinite `a`, without reordering.
///
/// Pivots below `RANK_TOL * tr(a)` are treated as zero: the diagonal entry
/// is clamped to 0 and the rest of the column is zeroed. A pivot more
/// negative than that tolerance means the input is not PSD.
pub fn semidefinite_cholesky(a: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    a.require_square("semidefinite_cholesky")?;
    let eps = RANK_TOL * a.trace()?.re.abs();
    semidefinite_cholesky_with_tol(a, eps, eps)
}

/// [`semidefinite_cholesky`] with explicit absolute tolerances: pivots up to
/// `eps` are zeroed, and pivots down to `-negative_tol` are clamped to zero
/// instead of rejected.
pub fn semidefinite_cholesky_with_tol(
    a: &ComplexMatrix,
    eps: f64,
    negative_tol: f64,
) -> Result<ComplexMatrix, LinalgError> {
    a.require_hermitian("semidefinite_cholesky")?;
    a.check_finite()?;
    let n = a.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let d = a[(j, j)].re - l.row(j)[..j].iter().map(Complex64::norm_sqr).sum::<f64>();
        if d < -negative_tol {
            return Err(LinalgError::NotPositiveSemidefinite { pivot: j, value: d });
        }
        if d <= eps {
            continue;
        }
        let ljj = d.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let dot: Complex64 = l.row(i)[..j]
                .iter()
                .zip(&l.row(j)[..j])
                .map(|(x, y)| x * y.conj())
                .sum();
            l[(i, j)] = (a[(i, j)] - dot) / ljj;
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reconstruction_error(a: &ComplexMatrix, l: &ComplexMatrix) -> f64 {
        l.matmul(&l.adjoint())
            .unwrap()
            .sub(a)
            .unwrap()
            .frobenius_norm()
    }

    #[test]
    fn identity_factors_as_identity() {
        let l = semidefinite_cholesky(&ComplexMatrix::identity(3)).unwrap();
        assert_eq!(l, ComplexMatrix::identity(3));
    }

    #[test]
    fn rank_one_outer_product() {
        let v = ComplexMatrix::column(&[c(1.0, 0.0), c(0.0, 1.0)]);
        let a = v.matmul(&v.adjoint()).unwrap();
        let l = semidefinite_cholesky(&a).unwrap();
        assert!((l[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((l[(1, 0)] - c(0.0, 1.0)).norm() < 1e-15);
        assert_eq!(l[(1, 1)], c(0.0, 0.0));
        assert_eq!(l[(0, 1)], c(0.0, 0.0));
        assert!(reconstruction_error(&a, &l) < 1e-15);
    }

    #[test]
    fn scaled_rank_one() {
        // v = (1, i) scaled by sqrt(2): first column (sqrt 2, i sqrt 2)
        let v = ComplexMatrix::column(&[c(2f64.sqrt(), 0.0), c(0.0, 2f64.sqrt())]);
        let a = v.matmul(&v.adjoint()).unwrap();
        let l = semidefinite_cholesky(&a).unwrap();
        assert!((l[(0, 0)].re - 2f64.sqrt()).abs() < 1e-15);
        assert!((l[(1, 0)] - c(0.0, 2f64.sqrt())).norm() < 1e-15);
        assert!(reconstruction_error(&a, &l) < 1e-14);
    }

    #[test]
    fn rejects_indefinite() {
        let a = ComplexMatrix::from_real_diag(&[1.0, -1.0]);
        assert!(matches!(
            semidefinite_cholesky(&a),
            Err(LinalgError::NotPositiveSemidefinite { pivot: 1, .. })
        ));
    }

    #[test]
    fn clamps_within_negative_tolerance() {
        let a = ComplexMatrix::from_real_diag(&[1.0, -1e-6]);
        assert!(semidefinite_cholesky_with_tol(&a, 1e-12, 1e-12).is_err());
        let l = semidefinite_cholesky_with_tol(&a, 1e-12, 1e-5).unwrap();
        assert_eq!(l, ComplexMatrix::from_real_diag(&[1.0, 0.0]));
    }

    #[test]
    fn zero_matrix_gives_zero_factor() {
        let l = semidefinite_cholesky(&ComplexMatrix::zeros(3, 3)).unwrap();
        assert_eq!(l, ComplexMatrix::zeros(3, 3));
    }

    #[test]
    fn upper_triangle_is_bit_zero() {
        let b = ComplexMatrix::from_fn(5, 3, |i, j| {
            c((i + 2 * j) as f64 * 0.3 - 1.0, (i * j) as f64 * 0.1)
        });
        let a = b.matmul(&b.adjoint()).unwrap();
        let l = semidefinite_cholesky(&a).unwrap();
        for i in 0..5 {
            for j in (i + 1)..5 {
                assert_eq!(l[(i, j)], c(0.0, 0.0));
            }
        }
        assert!(reconstruction_error(&a, &l) <= 1e-8 * a.frobenius_norm());
    }
}
