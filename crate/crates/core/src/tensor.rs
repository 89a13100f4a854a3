//! Dense tensors, index partitions and matricization.
//!
//! Storage is row-major with the last index varying fastest. Mode and index
//! values are 0-based throughout the library; user-facing text renders modes
//! 1-based.

use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, PartialEq)]
pub struct DenseTensor<T> {
    dims: Vec<usize>,
    data: Vec<T>,
}

/// Row-major strides for `dims`.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Advances a row-major multi-index; returns false after the last index.
pub(crate) fn next_index(index: &mut [usize], dims: &[usize]) -> bool {
    for k in (0..dims.len()).rev() {
        index[k] += 1;
        if index[k] < dims[k] {
            return true;
        }
        index[k] = 0;
    }
    false
}

impl<T: Scalar> DenseTensor<T> {
    pub fn new(dims: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "dims {dims:?} need {expected} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let len = dims.iter().product();
        Self { dims, data: vec![T::zero(); len] }
    }

    pub fn scalar(value: T) -> Self {
        Self { dims: Vec::new(), data: vec![value] }
    }

    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let len: usize = dims.iter().product();
        let mut data = Vec::with_capacity(len);
        if len > 0 {
            let mut index = vec![0; dims.len()];
            loop {
                data.push(f(&index));
                if !next_index(&mut index, &dims) {
                    break;
                }
            }
        }
        Self { dims, data }
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.dims.len(), "index order mismatch");
        let mut off = 0;
        for (k, (&i, &d)) in index.iter().zip(&self.dims).enumerate() {
            assert!(i < d, "index {i} out of bounds for mode {k} of size {d}");
            off = off * d + i;
        }
        off
    }

    pub fn get(&self, index: &[usize]) -> &T {
        &self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: T) {
        let off = self.offset(index);
        self.data[off] = value;
    }

    pub fn map<U: Scalar>(&self, f: impl FnMut(&T) -> U) -> DenseTensor<U> {
        DenseTensor { dims: self.dims.clone(), data: self.data.iter().map(f).collect() }
    }

    pub fn to_f64(&self) -> DenseTensor<f64> {
        self.map(|x| x.to_f64())
    }

    /// Tensor (outer) product: order `N1 + N2`, entries `a[d1..] * b[d2..]`.
    pub fn outer(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let mut data = Vec::with_capacity(self.len() * other.len());
        for a in &self.data {
            for b in &other.data {
                let mut v = a.clone();
                v.mul_by(b);
                data.push(v);
            }
        }
        Self { dims, data }
    }

    pub fn to_matrix(&self) -> Result<Matrix<T>> {
        if self.order() != 2 {
            return Err(Error::ShapeMismatch(format!(
                "order-{} tensor is not a matrix",
                self.order()
            )));
        }
        Matrix::new(self.dims[0], self.dims[1], self.data.clone())
    }

    pub fn from_matrix(m: &Matrix<T>) -> Self {
        Self { dims: vec![m.rows(), m.cols()], data: m.data().to_vec() }
    }

    /// Matricization with respect to `part`.
    ///
    /// Entry `(d_1, ..., d_N)` lands at row `sum_t d_{p_t} * prod_{t' > t} M_{p_t'}`
    /// and the analogous column over `Q`.
    pub fn matricize(&self, part: &IndexPartition) -> Result<Matrix<T>> {
        part.check_order(self.order())?;
        let (row_stride, col_stride) = self.placement_strides(part);
        let rows: usize = part.rows.iter().map(|&m| self.dims[m]).product();
        let cols: usize = part.cols.iter().map(|&m| self.dims[m]).product();
        let mut out = vec![T::zero(); rows * cols];
        let mut index = vec![0; self.order()];
        for value in &self.data {
            let r: usize = index.iter().zip(&row_stride).map(|(i, s)| i * s).sum();
            let c: usize = index.iter().zip(&col_stride).map(|(i, s)| i * s).sum();
            out[r * cols + c] = value.clone();
            next_index(&mut index, &self.dims);
        }
        Matrix::new(rows, cols, out)
    }

    /// Inverse of [`DenseTensor::matricize`].
    pub fn from_matricization(m: &Matrix<T>, dims: Vec<usize>, part: &IndexPartition) -> Result<Self> {
        part.check_order(dims.len())?;
        let shell = Self { dims: dims.clone(), data: Vec::new() };
        let (row_stride, col_stride) = shell.placement_strides(part);
        let rows: usize = part.rows.iter().map(|&k| dims[k]).product();
        let cols: usize = part.cols.iter().map(|&k| dims[k]).product();
        if (rows, cols) != (m.rows(), m.cols()) {
            return Err(Error::ShapeMismatch(format!(
                "expected a {rows}x{cols} matricization, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        Ok(Self::from_fn(dims, |index| {
            let r: usize = index.iter().zip(&row_stride).map(|(i, s)| i * s).sum();
            let c: usize = index.iter().zip(&col_stride).map(|(i, s)| i * s).sum();
            m.get(r, c).clone()
        }))
    }

    /// Per-mode multipliers into the row index (zero for column modes) and
    /// into the column index (zero for row modes).
    fn placement_strides(&self, part: &IndexPartition) -> (Vec<usize>, Vec<usize>) {
        let mut row_stride = vec![0; self.order()];
        let mut col_stride = vec![0; self.order()];
        let mut acc = 1;
        for &m in part.rows.iter().rev() {
            row_stride[m] = acc;
            acc *= self.dims[m];
        }
        acc = 1;
        for &m in part.cols.iter().rev() {
            col_stride[m] = acc;
            acc *= self.dims[m];
        }
        (row_stride, col_stride)
    }

    /// Applies `F^(1) ⊗ ... ⊗ F^(N)`:
    /// `out[k_1..k_N] = sum_d A[d_1..d_N] * prod_i F^(i)[k_i, d_i]`.
    ///
    /// Evaluated as N successive mode products rather than the full sum.
    pub fn apply_operator(&self, fs: &[Matrix<T>]) -> Result<Self> {
        if fs.len() != self.order() {
            return Err(Error::ShapeMismatch(format!(
                "order-{} tensor needs {} factors, got {}",
                self.order(),
                self.order(),
                fs.len()
            )));
        }
        for (i, f) in fs.iter().enumerate() {
            if f.cols() != self.dims[i] {
                return Err(Error::ShapeMismatch(format!(
                    "factor {} has {} columns but mode {} has size {}",
                    i + 1,
                    f.cols(),
                    i + 1,
                    self.dims[i]
                )));
            }
        }
        let mut current = self.clone();
        for (mode, f) in fs.iter().enumerate() {
            current = current.mode_product(mode, f);
        }
        Ok(current)
    }

    fn mode_product(&self, mode: usize, f: &Matrix<T>) -> Self {
        let outer: usize = self.dims[..mode].iter().product();
        let inner: usize = self.dims[mode + 1..].iter().product();
        let (new_dim, old_dim) = (f.rows(), self.dims[mode]);
        let mut dims = self.dims.clone();
        dims[mode] = new_dim;
        let mut data = vec![T::zero(); outer * new_dim * inner];
        for o in 0..outer {
            for d in 0..old_dim {
                let src = &self.data[(o * old_dim + d) * inner..(o * old_dim + d + 1) * inner];
                for k in 0..new_dim {
                    let w = f.get(k, d);
                    if w.is_zero() {
                        continue;
                    }
                    let dst = &mut data[(o * new_dim + k) * inner..(o * new_dim + k + 1) * inner];
                    for (x, y) in dst.iter_mut().zip(src) {
                        x.add_product(w, y);
                    }
                }
            }
        }
        Self { dims, data }
    }
}

impl<T: Scalar> fmt::Debug for DenseTensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DenseTensor")
            .field("dims", &self.dims)
            .field("data", &self.data.iter().map(|v| v.to_string()).collect::<Vec<_>>())
            .finish()
    }
}

/// Disjoint ordered split `(P, Q)` of the modes `0..N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexPartition {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl IndexPartition {
    /// Both lists must be strictly increasing, disjoint, and cover `0..order`.
    pub fn new(rows: Vec<usize>, cols: Vec<usize>, order: usize) -> Result<Self> {
        let increasing = |v: &[usize]| v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&rows) || !increasing(&cols) {
            return Err(Error::InvalidPartition("mode lists must be strictly increasing".into()));
        }
        let mut seen = vec![false; order];
        for &m in rows.iter().chain(&cols) {
            if m >= order {
                return Err(Error::InvalidPartition(format!("mode {} exceeds order {order}", m + 1)));
            }
            if std::mem::replace(&mut seen[m], true) {
                return Err(Error::InvalidPartition(format!("mode {} appears twice", m + 1)));
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("mode {} is not covered", missing + 1)));
        }
        Ok(Self { rows, cols })
    }

    /// Sorts the inputs first.
    pub fn from_sets(mut rows: Vec<usize>, mut cols: Vec<usize>, order: usize) -> Result<Self> {
        rows.sort_unstable();
        cols.sort_unstable();
        Self::new(rows, cols, order)
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn order(&self) -> usize {
        self.rows.len() + self.cols.len()
    }

    pub fn is_even(&self) -> bool {
        self.rows.len() == self.cols.len()
    }

    pub fn transposed(&self) -> Self {
        Self { rows: self.cols.clone(), cols: self.rows.clone() }
    }

    fn check_order(&self, order: usize) -> Result<()> {
        if self.order() != order {
            return Err(Error::InvalidPartition(format!(
                "partition covers {} modes but the tensor has order {order}",
                self.order()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for IndexPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[usize]| v.iter().map(|m| (m + 1).to_string()).collect::<Vec<_>>().join(",");
        write!(f, "P={{{}}} Q={{{}}}", list(&self.rows), list(&self.cols))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64) -> Rational {
        Rational::from_int(n)
    }

    #[test]
    fn order_two_matricization_is_identity_reshape() {
        let t = DenseTensor::new(vec![2, 3], (1..=6).map(q).collect()).unwrap();
        let part = IndexPartition::new(vec![0], vec![1], 2).unwrap();
        assert_eq!(t.matricize(&part).unwrap(), t.to_matrix().unwrap());
    }

    #[test]
    fn placement_of_a_single_entry() {
        // (d1,d2,d3,d4) = (2,1,2,1) 1-based, P={1,3}, Q={2,4} -> row 4, col 1.
        let mut t = DenseTensor::<Rational>::zeros(vec![2; 4]);
        t.set(&[1, 0, 1, 0], q(1));
        let part = IndexPartition::new(vec![0, 2], vec![1, 3], 4).unwrap();
        let m = t.matricize(&part).unwrap();
        let hits: Vec<(usize, usize)> = (0..4)
            .flat_map(|r| (0..4).map(move |c| (r, c)))
            .filter(|&(r, c)| !m.get(r, c).is_zero())
            .collect();
        assert_eq!(hits, vec![(3, 0)]);
    }

    #[test]
    fn elementary_tensor_matricizes_to_rank_one() {
        let v = DenseTensor::new(vec![2], vec![q(1), q(2)]).unwrap();
        let t = v.outer(&v).outer(&v).outer(&v);
        let vv: Vec<Rational> = [1, 2, 2, 4].into_iter().map(q).collect();
        let expected = Matrix::from_fn(4, 4, |r, c| vv[r].clone() * vv[c].clone());
        for (p, qq) in [(vec![0, 1], vec![2, 3]), (vec![0, 2], vec![1, 3]), (vec![0, 3], vec![1, 2])] {
            let m = t.matricize(&IndexPartition::new(p, qq, 4).unwrap()).unwrap();
            assert_eq!(m, expected);
            assert_eq!(m.rank_exact(), 1);
        }
    }

    #[test]
    fn partition_validation() {
        assert!(IndexPartition::new(vec![0, 1], vec![2], 4).is_err());
        assert!(IndexPartition::new(vec![0, 1], vec![1, 2], 3).is_err());
        assert!(IndexPartition::new(vec![1, 0], vec![2], 3).is_err());
        assert!(IndexPartition::new(vec![0], vec![3], 3).is_err());
        let t = DenseTensor::<Rational>::zeros(vec![2; 3]);
        let p = IndexPartition::new(vec![0], vec![1], 2).unwrap();
        assert!(matches!(t.matricize(&p), Err(Error::InvalidPartition(_))));
    }

    #[test]
    fn operator_identity_and_vector_cases() {
        let t = DenseTensor::from_fn(vec![2, 3, 2], |i| q((i[0] * 6 + i[1] * 2 + i[2]) as i64 - 4));
        let ids: Vec<Matrix<Rational>> = t.dims().iter().map(|&d| Matrix::identity(d)).collect();
        assert_eq!(t.apply_operator(&ids).unwrap(), t);

        let v = DenseTensor::new(vec![3], vec![q(1), q(-2), q(3)]).unwrap();
        let f = Matrix::<Rational>::from_int_rows(&[&[1, 0, 2], &[0, 1, 1]]);
        let out = v.apply_operator(std::slice::from_ref(&f)).unwrap();
        assert_eq!(out.dims(), &[2]);
        assert_eq!(out.data(), &[q(7), q(1)]);

        assert!(v.apply_operator(&[]).is_err());
        assert!(v.apply_operator(&[Matrix::identity(2)]).is_err());
    }

    #[test]
    fn operator_matches_full_sum() {
        let t = DenseTensor::from_fn(vec![2, 2, 3], |i| q((i[0] + 2 * i[1]) as i64 - (i[2] as i64)));
        let fs = vec![
            Matrix::<Rational>::from_int_rows(&[&[1, 2], &[0, 1], &[3, -1]]),
            Matrix::from_int_rows(&[&[2, 1], &[1, 1]]),
            Matrix::from_int_rows(&[&[1, 0, -1], &[2, 2, 0]]),
        ];
        let out = t.apply_operator(&fs).unwrap();
        let brute = DenseTensor::from_fn(vec![3, 2, 2], |k| {
            let mut acc = Rational::from_int(0);
            let mut d = vec![0; 3];
            loop {
                let mut term = t.get(&d).clone();
                for i in 0..3 {
                    term = term * fs[i].get(k[i], d[i]).clone();
                }
                acc = acc + term;
                if !next_index(&mut d, t.dims()) {
                    break;
                }
            }
            acc
        });
        assert_eq!(out, brute);
    }

    use num_traits::Zero;
}
