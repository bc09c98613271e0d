//! Small dense matrices and the symmetric kernels the rest of the crate is
//! built on: Jacobi eigensolver, Cholesky factorization, SPD inverse and the
//! spectral norm.
//!
//! Sizes here are tiny (state dimension of a control plant, LMI blocks of
//! twice that), so everything is row-major `Vec` storage with no blocking.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("{op} requires a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("matrix is not positive definite (pivot {pivot} = {value})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("ragged rows: row {row} has {len} entries, expected {expected}")]
    RaggedRows {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("empty matrix")]
    Empty,
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from a list of rows. All rows must have equal length.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let Some(first) = rows.first() else {
            return Err(LinalgError::Empty);
        };
        let cols = first.as_ref().len();
        if cols == 0 {
            return Err(LinalgError::Empty);
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LinalgError::RaggedRows {
                    row: i,
                    len: r.len(),
                    expected: cols,
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { T::zero() })
    }

    pub fn column(v: &[T]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn row_vector(v: &[T]) -> Self {
        Self {
            rows: 1,
            cols: v.len(),
            data: v.to_vec(),
        }
    }

    /// `[[a, b], [c, d]]` from four compatible blocks.
    pub fn block2x2(a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Self, LinalgError> {
        if a.rows != b.rows || c.rows != d.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "block2x2 rows",
                left: a.shape(),
                right: d.shape(),
            });
        }
        if a.cols != c.cols || b.cols != d.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "block2x2 cols",
                left: a.shape(),
                right: d.shape(),
            });
        }
        let rows = a.rows + c.rows;
        let cols = a.cols + b.cols;
        Ok(Self::from_fn(rows, cols, |i, j| {
            match (i < a.rows, j < a.cols) {
                (true, true) => a[(i, j)],
                (true, false) => b[(i, j - a.cols)],
                (false, true) => c[(i - a.rows, j)],
                (false, false) => d[(i - a.rows, j - a.cols)],
            }
        }))
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

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    fn zip_with(
        &self,
        rhs: &Self,
        op: &'static str,
        f: impl Fn(T, T) -> T,
    ) -> Result<Self, LinalgError> {
        if self.shape() != rhs.shape() {
            return Err(LinalgError::DimensionMismatch {
                op,
                left: self.shape(),
                right: rhs.shape(),
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

    pub fn try_mul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "mul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] = out.data[i * rhs.cols + j] + a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn try_mul_vec(&self, v: &[T]) -> Result<Vec<T>, LinalgError> {
        if self.cols != v.len() {
            return Err(LinalgError::DimensionMismatch {
                op: "mul_vec",
                left: self.shape(),
                right: (v.len(), 1),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `M·v` into a caller-owned buffer, accumulating (`out += M·v`).
    pub(crate) fn mul_vec_acc(&self, v: &[T], out: &mut [T]) {
        debug_assert_eq!(self.cols, v.len());
        debug_assert_eq!(self.rows, out.len());
        for (i, o) in out.iter_mut().enumerate() {
            *o = *o + dot(self.row(i), v);
        }
    }

    /// Bilinear form `xᵀ·M·y`.
    pub fn bilinear(&self, x: &[T], y: &[T]) -> Result<T, LinalgError> {
        if x.len() != self.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "bilinear",
                left: self.shape(),
                right: (x.len(), 1),
            });
        }
        let my = self.try_mul_vec(y)?;
        Ok(dot(x, &my))
    }

    pub fn symmetrize(&self) -> Self {
        let t = self.transpose();
        self.zip_with(&t, "symmetrize", |a, b| (a + b) * T::half())
            .expect("square by construction")
    }

    /// Largest `|M[i,j] − M[j,i]|`. Non-square matrices report infinity.
    pub fn max_asymmetry(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |s, &x| s + x * x).sqrt()
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |s, i| s + self[(i, i)])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Eigen-decomposition of the symmetric part of a square matrix.
    pub fn sym_eigen(&self) -> Result<SymEigen<T>, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                op: "sym_eigen",
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(jacobi_eigen(&self.symmetrize()))
    }

    pub fn max_eigenvalue(&self) -> Result<T, LinalgError> {
        Ok(self.sym_eigen()?.max_value())
    }

    pub fn min_eigenvalue(&self) -> Result<T, LinalgError> {
        Ok(self.sym_eigen()?.min_value())
    }

    /// Largest singular value, `sqrt(λ_max(MᵀM))`.
    pub fn spectral_norm(&self) -> T {
        if self.data.iter().all(|&x| x == T::zero()) {
            return T::zero();
        }
        let gram = self
            .transpose()
            .try_mul(self)
            .expect("MᵀM is always conformable");
        jacobi_eigen(&gram.symmetrize())
            .max_value()
            .max(T::zero())
            .sqrt()
    }

    /// Lower-triangular `L` with `L·Lᵀ = M`. Only the lower triangle of `M` is read.
    pub fn cholesky(&self) -> Result<Matrix<T>, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                op: "cholesky",
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d = d - l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(LinalgError::NotPositiveDefinite {
                    pivot: j,
                    value: d.as_f64(),
                });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s = s - l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(l)
    }

    /// Inverse of a symmetric positive definite matrix via Cholesky.
    pub fn spd_inverse(&self) -> Result<Matrix<T>, LinalgError> {
        let l = self.cholesky()?;
        let n = self.rows;
        let mut inv = Matrix::zeros(n, n);
        for col in 0..n {
            // forward: L·y = e_col
            let mut y = vec![T::zero(); n];
            for i in 0..n {
                let mut s = if i == col { T::one() } else { T::zero() };
                for k in 0..i {
                    s = s - l[(i, k)] * y[k];
                }
                y[i] = s / l[(i, i)];
            }
            // backward: Lᵀ·x = y
            let mut x = vec![T::zero(); n];
            for i in (0..n).rev() {
                let mut s = y[i];
                for k in (i + 1)..n {
                    s = s - l[(k, i)] * x[k];
                }
                x[i] = s / l[(i, i)];
            }
            for i in 0..n {
                inv[(i, col)] = x[i];
            }
        }
        Ok(inv.symmetrize())
    }

    pub fn cast<U: Real>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| U::lit(x.as_f64())).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

// Operator impls panic on shape mismatch; fallible callers use the `try_*` forms.

impl<T: Real> Add for &Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, rhs: Self) -> Matrix<T> {
        self.try_add(rhs).expect("matrix add: shape mismatch")
    }
}

impl<T: Real> Sub for &Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: Self) -> Matrix<T> {
        self.try_sub(rhs).expect("matrix sub: shape mismatch")
    }
}

impl<T: Real> Mul for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: Self) -> Matrix<T> {
        self.try_mul(rhs).expect("matrix mul: shape mismatch")
    }
}

impl<T: Real> Neg for &Matrix<T> {
    type Output = Matrix<T>;
    fn neg(self) -> Matrix<T> {
        self.map(|x| -x)
    }
}

/// Eigenvalues in ascending order with matching unit eigenvectors.
#[derive(Debug, Clone)]
pub struct SymEigen<T> {
    pub values: Vec<T>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: Matrix<T>,
}

impl<T: Real> SymEigen<T> {
    pub fn max_value(&self) -> T {
        *self.values.last().expect("non-empty spectrum")
    }

    pub fn min_value(&self) -> T {
        self.values[0]
    }

    pub fn vector(&self, k: usize) -> Vec<T> {
        self.vectors.col(k)
    }
}

/// Cyclic Jacobi rotations. Input must be exactly symmetric.
fn jacobi_eigen<T: Real>(m: &Matrix<T>) -> SymEigen<T> {
    let n = m.rows;
    let mut a = m.clone();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm();

    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + a[(p, q)] * a[(p, q)];
            }
        }
        if off == T::zero() || off.sqrt() <= T::epsilon() * T::lit(1e-3) * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::two() * apq);
                let t = if theta.abs() > T::lit(1e150).min(T::max_value().sqrt()) {
                    T::one() / (T::two() * theta)
                } else {
                    let sign = if theta >= T::zero() {
                        T::one()
                    } else {
                        -T::one()
                    };
                    sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = T::zero();
                a[(q, p)] = T::zero();
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(i, i)]
            .partial_cmp(&a[(j, j)])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    SymEigen { values, vectors }
}

#[inline]
pub fn dot<T: Real>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |s, (&a, &b)| s + a * b)
}

#[inline]
pub fn norm2<T: Real>(x: &[T]) -> T {
    dot(x, x).sqrt()
}
