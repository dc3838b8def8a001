//! Small dense complex linear algebra.
//!
//! Everything the detector needs is implemented here directly on a row-major
//! [`ComplexMatrix`]: Jacobi eigen/singular value decompositions, a
//! rank-revealing semidefinite Cholesky factorization, the Moore-Penrose
//! pseudoinverse and its rank-one update. Matrices in this crate are tiny
//! (the Gram matrix is `T x T` with `T` around ten), so clarity wins over
//! blocking or SIMD.

mod cholesky;
mod eigen;
mod pinv;

pub use cholesky::{semidefinite_cholesky, semidefinite_cholesky_with_tol};
pub use eigen::{hermitian_eigen, hermitian_min_eigenvalue, HermitianEigen};
pub use pinv::{pinv_rank1_update, pinv_rank1_update_in_place, pseudoinverse, svd, Svd};

use num_complex::Complex64;
use std::fmt;
use std::ops::{Index, IndexMut};

/// Relative rank tolerance shared by the factorizations.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: {lhs:?} vs {rhs:?}")]
    DimensionMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("{op} requires a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e} exceeds {tolerance:.3e})")]
    NotHermitian { asymmetry: f64, tolerance: f64 },
    #[error("matrix is not positive semidefinite (pivot {pivot} = {value:.3e})")]
    NotPositiveSemidefinite { pivot: usize, value: f64 },
    #[error("matrix is singular")]
    Singular,
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("expected {expected} entries for a {rows}x{cols} matrix, got {got}")]
    BadLength {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },
}

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting bad lengths and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::BadLength {
                rows,
                cols,
                expected: rows * cols,
                got: data.len(),
            });
        }
        let m = Self { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_diag(&d)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    /// Column vector from a slice.
    pub fn column(v: &[Complex64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn check_finite(&self) -> Result<(), LinalgError> {
        match self
            .data
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            Some(k) => Err(LinalgError::NonFinite {
                row: k / self.cols.max(1),
                col: k % self.cols.max(1),
            }),
            None => Ok(()),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_block(&self, start: usize, end: usize) -> Self {
        assert!(start <= end && end <= self.rows);
        Self {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    /// Columns `start..end` as a new matrix.
    pub fn col_block(&self, start: usize, end: usize) -> Self {
        assert!(start <= end && end <= self.cols);
        Self::from_fn(self.rows, end - start, |i, j| self[(i, start + j)])
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                lhs: self.shape(),
                rhs: rhs.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self^H * rhs` without materializing the adjoint.
    pub fn adjoint_mul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.rows != rhs.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "adjoint_mul",
                lhs: self.shape(),
                rhs: rhs.shape(),
            });
        }
        let mut out = Self::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            let lhs_row = self.row(k);
            let rhs_row = rhs.row(k);
            for (i, a) in lhs_row.iter().enumerate() {
                let a = a.conj();
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    fn zip_with(
        &self,
        rhs: &Self,
        op: &'static str,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self, LinalgError> {
        if self.shape() != rhs.shape() {
            return Err(LinalgError::DimensionMismatch {
                op,
                lhs: self.shape(),
                rhs: rhs.shape(),
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * k).collect(),
        }
    }

    pub fn scale_real(&self, k: f64) -> Self {
        self.scale(Complex64::new(k, 0.0))
    }

    /// `self + shift * I` for square matrices.
    pub fn shift_diagonal(&self, shift: f64) -> Result<Self, LinalgError> {
        self.require_square("shift_diagonal")?;
        let mut out = self.clone();
        for i in 0..self.rows {
            out[(i, i)].re += shift;
        }
        Ok(out)
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    pub fn trace(&self) -> Result<Complex64, LinalgError> {
        self.require_square("trace")?;
        Ok((0..self.rows).map(|i| self[(i, i)]).sum())
    }

    /// Largest entrywise deviation from Hermitian symmetry, `max |a_ij - conj(a_ji)|`.
    pub fn hermitian_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub(crate) fn require_square(&self, op: &'static str) -> Result<(), LinalgError> {
        if self.is_square() {
            Ok(())
        } else {
            Err(LinalgError::NotSquare {
                op,
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    /// Errors unless the matrix is square and Hermitian within `1e-9 * ||a||_F`.
    pub(crate) fn require_hermitian(&self, op: &'static str) -> Result<(), LinalgError> {
        self.require_square(op)?;
        let tolerance = 1e-9 * self.frobenius_norm();
        let asymmetry = self.hermitian_asymmetry();
        if asymmetry > tolerance {
            return Err(LinalgError::NotHermitian {
                asymmetry,
                tolerance,
            });
        }
        Ok(())
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Self, LinalgError> {
        self.require_square("inverse")?;
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let scale = self.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
                .expect("non-empty pivot range");
            let p = a[(pivot, col)];
            if p.norm() <= f64::EPSILON * scale * n as f64 || p.norm() == 0.0 {
                return Err(LinalgError::Singular);
            }
            a.swap_rows(col, pivot);
            inv.swap_rows(col, pivot);
            let p_inv = p.inv();
            for j in 0..n {
                a[(col, j)] *= p_inv;
                inv[(col, j)] *= p_inv;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a[(i, col)];
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let (ac, ic) = (a[(col, j)], inv[(col, j)]);
                    a[(i, j)] -= f * ac;
                    inv[(i, j)] -= f * ic;
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for k in 0..self.cols {
            self.data.swap(i * self.cols + k, j * self.cols + k);
        }
    }

    /// Rank counted from singular values above `RANK_TOL * sigma_max`.
    pub fn rank(&self) -> usize {
        let sv = svd(self).singular_values;
        let smax = sv.iter().copied().fold(0.0, f64::max);
        sv.iter()
            .filter(|&&s| s > RANK_TOL * smax && s > 0.0)
            .count()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:>10.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Computes a unitary 2x2 rotation `J` that diagonalizes the Hermitian block
/// `[[alpha, gamma], [conj(gamma), beta]]` under `J^H * block * J`.
///
/// Returned as `(J_pp, J_pq, J_qp, J_qq)`.
#[inline]
pub(crate) fn jacobi_rotation(
    alpha: f64,
    beta: f64,
    gamma: Complex64,
) -> (Complex64, Complex64, Complex64, Complex64) {
    let g = gamma.norm();
    let phase = gamma / g;
    let zeta = (beta - alpha) / (2.0 * g);
    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let e = phase.conj();
    (
        Complex64::new(c, 0.0),
        Complex64::new(s, 0.0),
        -e * s,
        e * c,
    )
}
