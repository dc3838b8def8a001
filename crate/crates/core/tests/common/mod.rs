//! Oracles and generators shared by the integration tests.
#![allow(dead_code)]

use mimo_glrt::{Complex64, ComplexMatrix};
use rand::Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// `B B^H` with `B` of shape `n x rank`.
pub fn random_psd<R: Rng>(rng: &mut R, n: usize, rank: usize) -> ComplexMatrix {
    let b = random_matrix(rng, n, rank);
    b.matmul(&b.adjoint()).unwrap()
}

pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let a = random_matrix(rng, n, n);
    a.add(&a.adjoint()).unwrap().scale_real(0.5)
}

/// Number of eigenvalues of the Hermitian `a` below `lambda`, from the signs
/// of the pivots of `a - lambda I` (ratios of consecutive leading principal
/// minors).
pub fn eigenvalues_below(a: &ComplexMatrix, lambda: f64) -> usize {
    let n = a.rows();
    let mut m = a.shift_diagonal(-lambda).unwrap();
    let mut count = 0;
    for k in 0..n {
        let mut d = m[(k, k)].re;
        if d == 0.0 {
            d = -f64::EPSILON * (1.0 + lambda.abs());
        }
        if d < 0.0 {
            count += 1;
        }
        for i in (k + 1)..n {
            let f = m[(i, k)] / d;
            for j in (k + 1)..n {
                let mkj = m[(k, j)];
                m[(i, j)] -= f * mkj;
            }
        }
    }
    count
}

/// Smallest eigenvalue by bisection on the minor sign count inside the
/// Gershgorin interval.
pub fn min_eigenvalue_bisection(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let radius = |i: usize| {
        (0..n)
            .filter(|&j| j != i)
            .map(|j| a[(i, j)].norm())
            .sum::<f64>()
    };
    let mut lo = (0..n)
        .map(|i| a[(i, i)].re - radius(i))
        .fold(f64::INFINITY, f64::min)
        - 1.0;
    let mut hi = (0..n)
        .map(|i| a[(i, i)].re + radius(i))
        .fold(f64::NEG_INFINITY, f64::max)
        + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eigenvalues_below(a, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn rel_err(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let scale = b.frobenius_norm().max(a.frobenius_norm());
    let diff = a.sub(b).unwrap().frobenius_norm();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Residuals of the four Penrose conditions, each made dimensionless:
/// `||A P A - A|| / ||A||`, `||P A P - P|| / ||P||`, and the Hermitian
/// defects of the projectors `A P` and `P A`.
pub fn penrose_residuals(a: &ComplexMatrix, p: &ComplexMatrix) -> [f64; 4] {
    let norm = |m: &ComplexMatrix| m.frobenius_norm().max(f64::MIN_POSITIVE);
    let ap = a.matmul(p).unwrap();
    let pa = p.matmul(a).unwrap();
    [
        ap.matmul(a).unwrap().sub(a).unwrap().frobenius_norm() / norm(a),
        pa.matmul(p).unwrap().sub(p).unwrap().frobenius_norm() / norm(p),
        ap.sub(&ap.adjoint()).unwrap().frobenius_norm(),
        pa.sub(&pa.adjoint()).unwrap().frobenius_norm(),
    ]
}

/// A random `(b, s)` pair for the rank-one pseudoinverse update. `b` is a
/// sum of `k` outer products with `k` drawn from `0..=m + 1`, so it is
/// often rank deficient, and `s` is sometimes taken inside its range.
pub fn random_update_case<R: Rng>(rng: &mut R, m: usize) -> (ComplexMatrix, Vec<Complex64>) {
    let k = rng.random_range(0..=m + 1);
    let mut b = ComplexMatrix::zeros(m, m);
    let mut vectors = Vec::new();
    for _ in 0..k {
        let v: Vec<Complex64> = (0..m)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let col = ComplexMatrix::column(&v);
        b = b.add(&col.matmul(&col.adjoint()).unwrap()).unwrap();
        vectors.push(v);
    }
    let s = if !vectors.is_empty() && rng.random_bool(0.3) {
        let w = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        vectors[0].iter().map(|z| z * w).collect()
    } else {
        (0..m)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    };
    (b, s)
}
