use super::{jacobi_rotation, ComplexMatrix, LinalgError};
use num_complex::Complex64;

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition `a = V diag(values) V^H` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: ComplexMatrix,
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Deterministic for a fixed input: rotations sweep the upper triangle in
/// row-major order until the off-diagonal mass is negligible.
pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<HermitianEigen, LinalgError> {
    a.require_hermitian("hermitian_eigen")?;
    a.check_finite()?;
    let n = a.rows();
    let mut w = a.clone();
    // Symmetrize so the rotations see an exactly Hermitian input.
    for i in 0..n {
        w[(i, i)] = Complex64::new(w[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = 0.5 * (w[(i, j)] + w[(j, i)].conj());
            w[(i, j)] = avg;
            w[(j, i)] = avg.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let total = w.frobenius_sq();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| w[(i, j)].norm_sqr())
            .sum();
        if off <= 1e-32 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let gamma = w[(p, q)];
                let g = gamma.norm();
                if g == 0.0 {
                    continue;
                }
                let (alpha, beta) = (w[(p, p)].re, w[(q, q)].re);
                // Skip rotations that cannot change the diagonal in floating point.
                if g <= f64::EPSILON * 1e-3 * (alpha.abs() + beta.abs()) {
                    w[(p, q)] = Complex64::new(0.0, 0.0);
                    w[(q, p)] = Complex64::new(0.0, 0.0);
                    continue;
                }
                let (jpp, jpq, jqp, jqq) = jacobi_rotation(alpha, beta, gamma);
                // w <- w J (columns p, q)
                for k in 0..n {
                    let (wp, wq) = (w[(k, p)], w[(k, q)]);
                    w[(k, p)] = wp * jpp + wq * jqp;
                    w[(k, q)] = wp * jpq + wq * jqq;
                }
                // w <- J^H w (rows p, q)
                for k in 0..n {
                    let (wp, wq) = (w[(p, k)], w[(q, k)]);
                    w[(p, k)] = jpp.conj() * wp + jqp.conj() * wq;
                    w[(q, k)] = jpq.conj() * wp + jqq.conj() * wq;
                }
                w[(p, q)] = Complex64::new(0.0, 0.0);
                w[(q, p)] = Complex64::new(0.0, 0.0);
                w[(p, p)].im = 0.0;
                w[(q, q)].im = 0.0;
                for k in 0..n {
                    let (vp, vq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vp * jpp + vq * jqp;
                    v[(k, q)] = vp * jpq + vq * jqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(i, i)].re.total_cmp(&w[(j, j)].re));
    let values = order.iter().map(|&i| w[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn hermitian_min_eigenvalue(a: &ComplexMatrix) -> Result<f64, LinalgError> {
    let eig = hermitian_eigen(a)?;
    Ok(eig.values.first().copied().unwrap_or(0.0))
}
