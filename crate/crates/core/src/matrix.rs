//! Dense row-major matrices, the Kronecker product and matrix rank.

use std::fmt;

use nalgebra::DMatrix;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { T::one() } else { T::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from integer rows; handy in tests and fixtures.
    pub fn from_int_rows(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self::from_fn(rows.len(), cols, |r, c| T::from_int(rows[r][c]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn map<U: Scalar>(&self, f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(|x| x.to_f64())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).clone())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    out.data[r * other.cols + c].add_product(a, other.get(k, c));
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product: `a[i][j] * b[k][l]` lands at row `i * b.rows + k`,
    /// column `j * b.cols + l` (0-based).
    pub fn kronecker(&self, b: &Self) -> Self {
        let rows = self.rows * b.rows;
        let cols = self.cols * b.cols;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a.is_zero() {
                    continue;
                }
                for k in 0..b.rows {
                    for l in 0..b.cols {
                        let mut v = a.clone();
                        v.mul_by(b.get(k, l));
                        out.set(i * b.rows + k, j * b.cols + l, v);
                    }
                }
            }
        }
        out
    }

    /// Rank in this matrix's scalar mode.
    pub fn rank(&self) -> Result<usize> {
        T::matrix_rank(self)
    }

    /// Gauss-Jordan inverse with partial pivoting on the largest magnitude.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "cannot invert a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .filter(|&r| !a.get(r, col).is_zero())
                .max_by(|&x, &y| {
                    a.get(x, col)
                        .abs()
                        .partial_cmp(&a.get(y, col).abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
            let Some(pivot) = pivot else {
                return Err(Error::SingularRepresentation { rank: col, size: n });
            };
            a.swap_rows(col, pivot);
            inv.swap_rows(col, pivot);
            let scale = T::one() / a.get(col, col).clone();
            a.scale_row(col, &scale);
            inv.scale_row(col, &scale);
            for r in 0..n {
                if r == col || a.get(r, col).is_zero() {
                    continue;
                }
                let factor = a.get(r, col).clone();
                a.sub_scaled_row(r, col, &factor);
                inv.sub_scaled_row(r, col, &factor);
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn scale_row(&mut self, row: usize, factor: &T) {
        for v in &mut self.data[row * self.cols..(row + 1) * self.cols] {
            v.mul_by(factor);
        }
    }

    /// `row[target] -= factor * row[source]`
    fn sub_scaled_row(&mut self, target: usize, source: usize, factor: &T) {
        let neg = -factor.clone();
        for c in 0..self.cols {
            let src = self.data[source * self.cols + c].clone();
            self.data[target * self.cols + c].add_product(&neg, &src);
        }
    }
}

impl Matrix<Rational> {
    /// Exact rank by fraction-preserving Gaussian elimination.
    ///
    /// Pivots on the entry of largest absolute value in the current column.
    /// Zero entries of the pivot row are skipped, which keeps the sparse
    /// Kronecker-structured matricizations cheap.
    pub fn rank_exact(&self) -> usize {
        let mut a = self.clone();
        let (rows, cols) = (a.rows, a.cols);
        let mut rank = 0;
        for col in 0..cols {
            if rank == rows {
                break;
            }
            let pivot = (rank..rows)
                .filter(|&r| !a.get(r, col).is_zero())
                .max_by(|&x, &y| a.get(x, col).abs().cmp(&a.get(y, col).abs()));
            let Some(pivot) = pivot else { continue };
            a.swap_rows(rank, pivot);

            let support: Vec<usize> =
                (col + 1..cols).filter(|&c| !a.get(rank, c).is_zero()).collect();
            let pivot_value = a.get(rank, col).clone();
            for r in rank + 1..rows {
                if a.get(r, col).is_zero() {
                    continue;
                }
                let factor = a.get(r, col).clone() / pivot_value.clone();
                let neg = -factor;
                for &c in &support {
                    let src = a.data[rank * cols + c].clone();
                    a.data[r * cols + c].add_product(&neg, &src);
                }
                a.data[r * cols + col] = Rational::zero();
            }
            rank += 1;
        }
        rank
    }
}

impl Matrix<f64> {
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        if !self.is_finite() {
            return Err(Error::NonFinite);
        }
        if self.rows == 0 || self.cols == 0 {
            return Ok(Vec::new());
        }
        let m = DMatrix::from_row_slice(self.rows, self.cols, &self.data);
        let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        Ok(sv)
    }

    /// Numeric rank: the number of singular values strictly greater than
    /// `tol * max(rows, cols) * sigma_max`.
    pub fn rank_numeric(&self, tol: f64) -> Result<usize> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidTolerance(tol));
        }
        let sv = self.singular_values()?;
        Ok(count_above_threshold(&sv, tol, self.rows.max(self.cols)))
    }
}

/// Threshold used by [`Matrix::rank_numeric`].
pub fn rank_threshold(singular_values: &[f64], tol: f64, max_dim: usize) -> f64 {
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    tol * max_dim as f64 * sigma_max
}

fn count_above_threshold(singular_values: &[f64], tol: f64, max_dim: usize) -> usize {
    let threshold = rank_threshold(singular_values, tol, max_dim);
    singular_values.iter().filter(|&&s| s > threshold).count()
}

impl<T: Scalar> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|v| v.to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn exact_rank_basics() {
        assert_eq!(Matrix::<Rational>::identity(4).rank_exact(), 4);
        assert_eq!(Matrix::<Rational>::zeros(3, 5).rank_exact(), 0);

        let u = [q(1, 2), q(-3, 1), q(2, 7)];
        let v = [q(5, 1), q(1, 3)];
        let outer = Matrix::from_fn(3, 2, |r, c| u[r].clone() * v[c].clone());
        assert_eq!(outer.rank_exact(), 1);
    }

    #[test]
    fn exact_rank_detects_dependent_rows() {
        let m = Matrix::<Rational>::from_int_rows(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        assert_eq!(m.rank_exact(), 2);
        assert_eq!(m.transpose().rank_exact(), 2);
    }

    #[test]
    fn numeric_rank_thresholds() {
        assert_eq!(Matrix::<f64>::identity(4).rank_numeric(1e-9).unwrap(), 4);
        let m = Matrix::new(2, 2, vec![1.0, 0.0, 0.0, 1e-15]).unwrap();
        assert_eq!(m.rank_numeric(1e-9).unwrap(), 1);
        assert_eq!(Matrix::<f64>::zeros(3, 3).rank_numeric(1e-9).unwrap(), 0);
    }

    #[test]
    fn numeric_rank_rejects_bad_input() {
        let m = Matrix::new(1, 2, vec![1.0, f64::NAN]).unwrap();
        assert!(matches!(m.rank_numeric(1e-9), Err(Error::NonFinite)));
        let m = Matrix::<f64>::identity(2);
        assert!(matches!(m.rank_numeric(0.0), Err(Error::InvalidTolerance(_))));
        assert!(matches!(m.rank_numeric(-1.0), Err(Error::InvalidTolerance(_))));
    }

    #[test]
    fn kronecker_of_identities() {
        let k = Matrix::<Rational>::identity(2).kronecker(&Matrix::identity(3));
        assert_eq!(k, Matrix::identity(6));
    }

    #[test]
    fn kronecker_matches_quadruple_loop() {
        let a = Matrix::<Rational>::from_int_rows(&[&[1, 2], &[3, 4]]);
        let b = Matrix::<Rational>::from_int_rows(&[&[0, 1], &[1, 0]]);
        let k = a.kronecker(&b);
        assert_eq!((k.rows(), k.cols()), (4, 4));
        let mut expected = Matrix::<Rational>::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                for r in 0..2 {
                    for s in 0..2 {
                        expected.set(i * 2 + r, j * 2 + s, a.get(i, j).clone() * b.get(r, s).clone());
                    }
                }
            }
        }
        assert_eq!(k, expected);
        let frozen = Matrix::<Rational>::from_int_rows(&[
            &[0, 1, 0, 2],
            &[1, 0, 2, 0],
            &[0, 3, 0, 4],
            &[3, 0, 4, 0],
        ]);
        assert_eq!(k, frozen);
    }

    #[test]
    fn inverse_round_trip() {
        let f = Matrix::<Rational>::from_int_rows(&[&[2, 1, 0], &[1, 3, 1], &[0, 1, 4]]);
        let inv = f.inverse().unwrap();
        assert_eq!(f.matmul(&inv).unwrap(), Matrix::identity(3));
        let singular = Matrix::<Rational>::from_int_rows(&[&[1, 2], &[2, 4]]);
        assert!(singular.inverse().is_err());
    }
}
