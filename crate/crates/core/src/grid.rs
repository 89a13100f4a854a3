//! Grid tensors by exhaustive enumeration of template assignments.
//!
//! Position `(j, i)` of the `H x H` representation grid (row `j`, column `i`,
//! both 0-based) is tensor mode `j * H + i`. For an assignment
//! `d = (d_1, ..., d_N)` the representation output is `O[m, j, i] = F[d_(j,i), m]`
//! and the grid tensor stores the chosen output channel of the network.
//! With `F = I` the grid tensor is the coefficients tensor of the network.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{rank_threshold, Matrix};
use crate::network::{forward_network, NetworkParams, NetworkSpec};
use crate::scalar::{Rational, Scalar, ScalarMode};
use crate::tensor::{DenseTensor, IndexPartition};

/// Default cap on `M^N`, the number of grid-tensor entries.
pub const DEFAULT_GRID_CAP: u64 = 1 << 20;

/// Number of entries `M^N`, or `None` if it does not fit in `u128`.
pub fn grid_entries(rep_channels: usize, order: usize) -> Option<u128> {
    (rep_channels as u128).checked_pow(order.try_into().ok()?)
}

/// Template indices `d_1..d_N` of the flat row-major position `flat`.
pub fn assignment(flat: usize, rep_channels: usize, order: usize) -> Vec<usize> {
    let mut digits = vec![0; order];
    let mut rest = flat;
    for k in (0..order).rev() {
        digits[k] = rest % rep_channels;
        rest /= rep_channels;
    }
    digits
}

/// Representation output `O[m, j, i] = F[d_(j,i), m]` for an assignment.
pub fn representation_output<T: Scalar>(f: &Matrix<T>, digits: &[usize], width: usize) -> DenseTensor<T> {
    let m = f.rows();
    let n = width * width;
    let mut data = Vec::with_capacity(m * n);
    for channel in 0..m {
        for &d in digits {
            data.push(f.get(d, channel).clone());
        }
    }
    DenseTensor::new(vec![m, width, width], data).expect("shape is consistent by construction")
}

/// Builds the grid tensor of output channel `output_channel` (0-based).
///
/// Entries are independent, so evaluation is spread over the rayon pool;
/// no reduction crosses entries and the result is identical in any order.
pub fn build_grid_tensor<T: Scalar>(
    spec: &NetworkSpec,
    params: &NetworkParams<T>,
    f: &Matrix<T>,
    output_channel: usize,
    cap: u64,
) -> Result<DenseTensor<T>> {
    spec.require_collapsing()?;
    params.check_against(spec)?;
    let m = spec.rep_channels();
    if f.rows() != m || f.cols() != m {
        return Err(Error::ShapeMismatch(format!(
            "representation matrix must be {m}x{m}, got {}x{}",
            f.rows(),
            f.cols()
        )));
    }
    let rank = f.rank()?;
    if rank < m {
        return Err(Error::SingularRepresentation { rank, size: m });
    }
    if output_channel >= spec.output_channels() {
        return Err(Error::Precondition(format!(
            "output channel {} does not exist (network has {})",
            output_channel + 1,
            spec.output_channels()
        )));
    }
    let order = spec.grid_order();
    let entries = grid_entries(m, order).unwrap_or(u128::MAX);
    if entries > cap as u128 {
        return Err(Error::GridTooLarge { entries, cap });
    }
    let total = entries as usize;
    let width = spec.width();

    let data = (0..total)
        .into_par_iter()
        .map(|flat| {
            let digits = assignment(flat, m, order);
            let rep = representation_output(f, &digits, width);
            let out = forward_network(spec, params, &rep)?;
            Ok(out.data()[output_channel].clone())
        })
        .collect::<Result<Vec<T>>>()?;
    DenseTensor::new(vec![m; order], data)
}

/// Grid tensor with `F = I`, i.e. the coefficients tensor.
pub fn coefficients_tensor<T: Scalar>(
    spec: &NetworkSpec,
    params: &NetworkParams<T>,
    output_channel: usize,
    cap: u64,
) -> Result<DenseTensor<T>> {
    build_grid_tensor(spec, params, &Matrix::identity(spec.rep_channels()), output_channel, cap)
}

/// Shape and rank of one matricized grid tensor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub mode: ScalarMode,
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    /// Float mode only: relative tolerance and the absolute cutoff it implies.
    pub tol: Option<f64>,
    pub threshold: Option<f64>,
    /// Float mode only: the singular values just above and below the cutoff.
    pub singular_values_near_threshold: Vec<f64>,
}

/// Exact rank of the grid tensor of output channel 0, matricized by `part`.
pub fn exact_rank(
    spec: &NetworkSpec,
    params: &NetworkParams<Rational>,
    f: &Matrix<Rational>,
    part: &IndexPartition,
    cap: u64,
) -> Result<RankReport> {
    let mat = build_grid_tensor(spec, params, f, 0, cap)?.matricize(part)?;
    Ok(RankReport {
        mode: ScalarMode::Exact,
        rows: mat.rows(),
        cols: mat.cols(),
        rank: mat.rank_exact(),
        tol: None,
        threshold: None,
        singular_values_near_threshold: Vec::new(),
    })
}

/// Numeric rank (singular values above `tol * max(rows, cols) * sigma_max`)
/// of the float grid tensor of output channel 0.
pub fn float_rank(
    spec: &NetworkSpec,
    params: &NetworkParams<f64>,
    f: &Matrix<f64>,
    part: &IndexPartition,
    cap: u64,
    tol: f64,
) -> Result<RankReport> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidTolerance(tol));
    }
    let mat = build_grid_tensor(spec, params, f, 0, cap)?.matricize(part)?;
    let sv = mat.singular_values()?;
    let threshold = rank_threshold(&sv, tol, mat.rows().max(mat.cols()));
    let rank = sv.iter().filter(|&&s| s > threshold).count();
    let lo = rank.saturating_sub(2);
    let hi = (rank + 2).min(sv.len());
    Ok(RankReport {
        mode: ScalarMode::Float,
        rows: mat.rows(),
        cols: mat.cols(),
        rank,
        tol: Some(tol),
        threshold: Some(threshold),
        singular_values_near_threshold: sv[lo..hi].to_vec(),
    })
}

/// Which half of the grid goes to the rows of the matricization.
///
/// Left-right puts columns `i < H/2` in `P`; top-bottom puts rows `j < H/2`
/// in `P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionKind {
    LeftRight,
    TopBottom,
}

impl PartitionKind {
    pub fn partition(self, width: usize) -> Result<IndexPartition> {
        match self {
            PartitionKind::LeftRight => left_right_partition(width),
            PartitionKind::TopBottom => top_bottom_partition(width),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PartitionKind::LeftRight => "left-right",
            PartitionKind::TopBottom => "top-bottom",
        }
    }

    pub const ALL: [PartitionKind; 2] = [PartitionKind::LeftRight, PartitionKind::TopBottom];
}

impl std::str::FromStr for PartitionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left-right" => Ok(PartitionKind::LeftRight),
            "top-bottom" => Ok(PartitionKind::TopBottom),
            other => Err(Error::InvalidPartition(format!("unknown partition kind `{other}`"))),
        }
    }
}

fn half_split(width: usize, in_first: impl Fn(usize, usize) -> bool) -> Result<IndexPartition> {
    if width == 0 || !width.is_multiple_of(2) {
        return Err(Error::InvalidPartition(format!(
            "standard partitions need an even width, got {width}"
        )));
    }
    let (mut p, mut q) = (Vec::new(), Vec::new());
    for j in 0..width {
        for i in 0..width {
            if in_first(j, i) {
                p.push(j * width + i);
            } else {
                q.push(j * width + i);
            }
        }
    }
    IndexPartition::new(p, q, width * width)
}

pub fn left_right_partition(width: usize) -> Result<IndexPartition> {
    half_split(width, |_, i| i < width / 2)
}

pub fn top_bottom_partition(width: usize) -> Result<IndexPartition> {
    half_split(width, |j, _| j < width / 2)
}

/// Partition from two sets of grid positions `(row, col)`, 0-based.
pub fn custom_partition(width: usize, first: &[(usize, usize)], second: &[(usize, usize)]) -> Result<IndexPartition> {
    let mode = |&(j, i): &(usize, usize)| -> Result<usize> {
        if j >= width || i >= width {
            return Err(Error::InvalidPartition(format!(
                "position ({}, {}) lies outside the {width}x{width} grid",
                j + 1,
                i + 1
            )));
        }
        Ok(j * width + i)
    };
    let p = first.iter().map(mode).collect::<Result<Vec<_>>>()?;
    let q = second.iter().map(mode).collect::<Result<Vec<_>>>()?;
    IndexPartition::from_sets(p, q, width * width)
}

/// Every unordered even split of `0..order` (mode 0 always in `P`).
pub fn even_partitions(order: usize) -> Vec<IndexPartition> {
    if order == 0 || !order.is_multiple_of(2) {
        return Vec::new();
    }
    let half = order / 2;
    let mut out = Vec::new();
    let mut chosen = vec![0];
    fn recurse(next: usize, order: usize, half: usize, chosen: &mut Vec<usize>, out: &mut Vec<IndexPartition>) {
        if chosen.len() == half {
            let q: Vec<usize> = (0..order).filter(|m| !chosen.contains(m)).collect();
            out.push(IndexPartition::new(chosen.clone(), q, order).expect("valid by construction"));
            return;
        }
        for m in next..order {
            if order - m < half - chosen.len() {
                break;
            }
            chosen.push(m);
            recurse(m + 1, order, half, chosen, out);
            chosen.pop();
        }
    }
    recurse(1, order, half, &mut chosen, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_partitions_at_width_two() {
        let lr = left_right_partition(2).unwrap();
        assert_eq!((lr.rows(), lr.cols()), (&[0, 2][..], &[1, 3][..]));
        let tb = top_bottom_partition(2).unwrap();
        assert_eq!((tb.rows(), tb.cols()), (&[0, 1][..], &[2, 3][..]));
        assert!(left_right_partition(3).is_err());
        assert!(top_bottom_partition(0).is_err());
    }

    #[test]
    fn even_partition_counts() {
        assert_eq!(even_partitions(4).len(), 3);
        assert_eq!(even_partitions(6).len(), 10);
        assert!(even_partitions(5).is_empty());
        for p in even_partitions(4) {
            assert!(p.is_even());
            assert_eq!(p.rows()[0], 0);
        }
    }

    #[test]
    fn custom_partition_checks() {
        let p = custom_partition(2, &[(0, 0), (1, 1)], &[(0, 1), (1, 0)]).unwrap();
        assert_eq!((p.rows(), p.cols()), (&[0, 3][..], &[1, 2][..]));
        assert!(custom_partition(2, &[(0, 0), (0, 1)], &[(0, 1), (1, 0)]).is_err());
        assert!(custom_partition(2, &[(0, 0)], &[(0, 1), (1, 0)]).is_err());
        assert!(custom_partition(2, &[(0, 0), (2, 0)], &[(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn assignment_is_row_major() {
        assert_eq!(assignment(0, 2, 4), vec![0, 0, 0, 0]);
        assert_eq!(assignment(1, 2, 4), vec![0, 0, 0, 1]);
        assert_eq!(assignment(10, 2, 4), vec![1, 0, 1, 0]);
        assert_eq!(assignment(5, 3, 2), vec![1, 2]);
        assert_eq!(grid_entries(2, 16), Some(65536));
        assert_eq!(grid_entries(3, 200), None);
    }
}
