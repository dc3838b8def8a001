use super::{jacobi_rotation, ComplexMatrix, LinalgError, RANK_TOL};
use num_complex::Complex64;

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `a = U diag(sigma) V^H`.
///
/// `u` is `rows x k`, `v` is `cols x k` with `k = min(rows, cols)`. Columns
/// of `u` belonging to zero singular values are zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

/// One-sided Jacobi SVD. The rotations are the Jacobi eigen-rotations of
/// `a^H a`, applied to the columns of `a` so that `a^H a` is never formed
/// and small singular values keep full relative accuracy.
pub fn svd(a: &ComplexMatrix) -> Svd {
    if a.rows() < a.cols() {
        let t = svd(&a.adjoint());
        return Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        };
    }
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = ComplexMatrix::identity(n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, Complex64::new(0.0, 0.0));
                for i in 0..m {
                    let (wp, wq) = (w[(i, p)], w[(i, q)]);
                    alpha += wp.norm_sqr();
                    beta += wq.norm_sqr();
                    gamma += wp.conj() * wq;
                }
                let g = gamma.norm();
                if g == 0.0 || g <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let (jpp, jpq, jqp, jqq) = jacobi_rotation(alpha, beta, gamma);
                for i in 0..m {
                    let (wp, wq) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = wp * jpp + wq * jqp;
                    w[(i, q)] = wp * jpq + wq * jqq;
                }
                for i in 0..n {
                    let (vp, vq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = vp * jpp + vq * jqp;
                    v[(i, q)] = vp * jpq + vq * jqq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut singular_values = Vec::with_capacity(n);
    for j in 0..n {
        let sigma = (0..m).map(|i| w[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        singular_values.push(sigma);
        if sigma > 0.0 {
            for i in 0..m {
                w[(i, j)] /= sigma;
            }
        }
    }
    Svd {
        u: w,
        singular_values,
        v,
    }
}

/// Moore-Penrose pseudoinverse. Singular values at or below
/// `RANK_TOL * sigma_max` are treated as zero.
pub fn pseudoinverse(a: &ComplexMatrix) -> ComplexMatrix {
    let Svd {
        u,
        singular_values,
        v,
    } = svd(a);
    let smax = singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = RANK_TOL * smax;
    let mut out = ComplexMatrix::zeros(a.cols(), a.rows());
    for (k, &sigma) in singular_values.iter().enumerate() {
        if sigma <= cutoff || sigma == 0.0 {
            continue;
        }
        let inv = 1.0 / sigma;
        for i in 0..a.cols() {
            let vi = v[(i, k)] * inv;
            for j in 0..a.rows() {
                out[(i, j)] += vi * u[(j, k)].conj();
            }
        }
    }
    out
}

/// `(b + s s^H)^+` from `b^+`, for Hermitian PSD `b`.
pub fn pinv_rank1_update(
    b_pinv: &ComplexMatrix,
    b: &ComplexMatrix,
    s: &[Complex64],
) -> Result<ComplexMatrix, LinalgError> {
    let m = s.len();
    for mat in [b_pinv, b] {
        if mat.shape() != (m, m) {
            return Err(LinalgError::DimensionMismatch {
                op: "pinv_rank1_update",
                lhs: mat.shape(),
                rhs: (m, 1),
            });
        }
    }
    let mut out = ComplexMatrix::zeros(m, m);
    let mut work = vec![Complex64::new(0.0, 0.0); 2 * m];
    pinv_rank1_update_in_place(
        m,
        b_pinv.as_slice(),
        b.as_slice(),
        s,
        out.as_mut_slice(),
        &mut work,
    );
    Ok(out)
}

/// Slice form of [`pinv_rank1_update`] on row-major `m x m` buffers.
///
/// `work` must hold at least `2m` entries. When `s` lies in the range of `b`
/// (always the case once `b` has full rank) this is the Sherman-Morrison
/// form in `O(m^2)`. Otherwise the rank grows by one and Meyer's update for
/// a Hermitian rank-one term is used, verified against the Penrose
/// conditions and recomputed from scratch if the check fails.
pub fn pinv_rank1_update_in_place(
    m: usize,
    b_pinv: &[Complex64],
    b: &[Complex64],
    s: &[Complex64],
    out: &mut [Complex64],
    work: &mut [Complex64],
) {
    debug_assert!(b_pinv.len() == m * m && b.len() == m * m && s.len() == m && out.len() == m * m);
    let (k, u) = work[..2 * m].split_at_mut(m);
    // k = b^+ s
    for i in 0..m {
        k[i] = b_pinv[i * m..(i + 1) * m]
            .iter()
            .zip(s)
            .map(|(x, y)| x * y)
            .sum();
    }
    // u = (I - b b^+) s
    for i in 0..m {
        let bk: Complex64 = b[i * m..(i + 1) * m]
            .iter()
            .zip(k.iter())
            .map(|(x, y)| x * y)
            .sum();
        u[i] = s[i] - bk;
    }
    let s_sq: f64 = s.iter().map(Complex64::norm_sqr).sum();
    let u_sq: f64 = u.iter().map(Complex64::norm_sqr).sum();
    let beta = 1.0
        + s.iter()
            .zip(k.iter())
            .map(|(x, y)| (x.conj() * y).re)
            .sum::<f64>();

    if u_sq <= RANK_TOL * s_sq {
        let inv_beta = 1.0 / beta;
        for i in 0..m {
            for j in 0..m {
                out[i * m + j] = b_pinv[i * m + j] - k[i] * k[j].conj() * inv_beta;
            }
        }
        return;
    }

    let inv_u = 1.0 / u_sq;
    let w = beta * inv_u * inv_u;
    for i in 0..m {
        for j in 0..m {
            out[i * m + j] = b_pinv[i * m + j] - (k[i] * u[j].conj() + u[i] * k[j].conj()) * inv_u
                + u[i] * u[j].conj() * w;
        }
    }

    let updated = ComplexMatrix::from_fn(m, m, |i, j| b[i * m + j] + s[i] * s[j].conj());
    let candidate = ComplexMatrix::from_fn(m, m, |i, j| out[i * m + j]);
    if !satisfies_penrose(&updated, &candidate, 1e-9) {
        out.copy_from_slice(pseudoinverse(&updated).as_slice());
    }
}

/// First two Penrose conditions for a Hermitian `a` and candidate `p`.
fn satisfies_penrose(a: &ComplexMatrix, p: &ComplexMatrix, tol: f64) -> bool {
    let ap = a.matmul(p).expect("square");
    let apa = ap.matmul(a).expect("square");
    let pap = p.matmul(&ap).expect("square");
    let e1 = apa.sub(a).expect("square").frobenius_norm();
    let e2 = pap.sub(p).expect("square").frobenius_norm();
    e1.is_finite()
        && e2.is_finite()
        && e1 <= tol * a.frobenius_norm()
        && e2 <= tol * p.frobenius_norm()
}
