//! Small dense linear algebra, exact shapes up to dimension 8.
//!
//! Everything here is sized for the matrices that arise from iterated
//! function systems in low dimension: singular values by one-sided Jacobi,
//! eigenvalues by shifted QR on a balanced Hessenberg form, Kronecker
//! products, and exterior powers assembled from minors. No BLAS, no
//! allocationless tricks; correctness and determinism over speed.

mod eigen;
mod exterior;
mod kron;
mod svd;

pub use eigen::{eigen, EigenSpectrum};
pub use exterior::exterior_power;
pub use kron::{kronecker, kronecker_vec};
pub use svd::{singular_values, svd, SingularSpectrum, Svd};

use crate::error::{Error, Result};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

/// Dense row-major matrix over the working scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "expected {}x{} = {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        if rows == 0 || cols == 0 {
            return Err(Error::Shape("matrix dimensions must be >= 1".into()));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Build from nested row slices; mostly used in tests and constructors.
    pub fn from_rows(rows: &[&[T]]) -> Self {
        let r = rows.len();
        assert!(r >= 1);
        let c = rows[0].len();
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// 2x2 rotation by `theta` radians.
    pub fn rotation2(theta: T) -> Self {
        let (s, c) = theta.sin_cos();
        Matrix::from_rows(&[&[c, -s], &[s, c]])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Matrix<T> {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, factor: T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * factor).collect(),
        }
    }

    pub fn add(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn mul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(
            self.cols, other.rows,
            "inner dimensions must agree: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![T::zero(); self.rows];
        for i in 0..self.rows {
            let mut acc = T::zero();
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Matrix<T>) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .map(|&x| x * x)
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    /// Operator norm, i.e. the largest singular value.
    pub fn operator_norm(&self) -> Result<T> {
        Ok(singular_values(self)?.values[0])
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> Result<T> {
        if !self.is_square() {
            return Err(Error::Shape(format!(
                "determinant requires a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let d = self.rows;
        let mut a = self.clone();
        let mut det = T::one();
        for k in 0..d {
            let mut piv = k;
            for i in k + 1..d {
                if a[(i, k)].abs() > a[(piv, k)].abs() {
                    piv = i;
                }
            }
            if a[(piv, k)] == T::zero() {
                return Ok(T::zero());
            }
            if piv != k {
                for j in 0..d {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(piv, j)];
                    a[(piv, j)] = tmp;
                }
                det = -det;
            }
            det *= a[(k, k)];
            for i in k + 1..d {
                let f = a[(i, k)] / a[(k, k)];
                for j in k..d {
                    let sub = f * a[(k, j)];
                    a[(i, j)] -= sub;
                }
            }
        }
        Ok(det)
    }

    /// Solve `self * x = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        if !self.is_square() {
            return Err(Error::Shape("linear solve requires a square matrix".into()));
        }
        let d = self.rows;
        if rhs.len() != d {
            return Err(Error::Shape(format!(
                "rhs length {} does not match dimension {}",
                rhs.len(),
                d
            )));
        }
        let mut a = self.clone();
        let mut b = rhs.to_vec();
        for k in 0..d {
            let mut piv = k;
            for i in k + 1..d {
                if a[(i, k)].abs() > a[(piv, k)].abs() {
                    piv = i;
                }
            }
            if a[(piv, k)].abs() < crate::scalar::real::<T>(1e-300) {
                return Err(Error::Numerical("singular matrix in linear solve".into()));
            }
            if piv != k {
                for j in 0..d {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(piv, j)];
                    a[(piv, j)] = tmp;
                }
                b.swap(k, piv);
            }
            for i in k + 1..d {
                let f = a[(i, k)] / a[(k, k)];
                for j in k..d {
                    let sub = f * a[(k, j)];
                    a[(i, j)] -= sub;
                }
                let sub = f * b[k];
                b[i] -= sub;
            }
        }
        for k in (0..d).rev() {
            let mut acc = b[k];
            for j in k + 1..d {
                acc -= a[(k, j)] * b[j];
            }
            b[k] = acc / a[(k, k)];
        }
        Ok(b)
    }

    pub(crate) fn ensure_square_finite(&self, op: &str) -> Result<()> {
        if !self.is_square() {
            return Err(Error::Shape(format!(
                "{op} requires a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        if !self.is_finite() {
            return Err(Error::Domain(format!(
                "{op}: matrix has non-finite entries"
            )));
        }
        Ok(())
    }
}

impl<T: Real> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_and_transpose() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let ab = a.mul(&b);
        assert_eq!(ab, Matrix::from_rows(&[&[2.0, 1.0], &[4.0, 3.0]]));
        assert_eq!(a.transpose()[(0, 1)], 3.0);
    }

    #[test]
    fn det_and_solve() {
        let a = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 3.0]]);
        assert!((a.det().unwrap() - 5.0_f64).abs() < 1e-14);
        let x = a.solve(&[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14);
        assert!((x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn solve_rejects_singular() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(a.solve(&[1.0, 1.0]).is_err());
    }
}
