//! A width-`H`, stride-1 first layer that reaches the maximal rank
//! `M^(H^2/2)` for any even partition of the grid.
//!
//! Positions of the two halves are paired off; each pair gets its own
//! output position of the first layer (an "anchor" no larger than either
//! member along both axes) whose filter computes `[d_q = c][d_p = c]`. The
//! next layer sums those indicators per anchor and multiplies across anchors.

use super::tail::tail_layers;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{Filter, LayerParams, LayerSpec, NetworkParams, NetworkSpec};
use crate::scalar::{Rational, Scalar};
use crate::tensor::IndexPartition;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairAnchor {
    /// Lexicographically smaller grid position of the pair, `(row, col)`.
    pub first: (usize, usize),
    pub second: (usize, usize),
    /// First-layer output position hosting the pair.
    pub anchor: (usize, usize),
}

impl PairAnchor {
    fn offsets(&self) -> [(usize, usize); 2] {
        let (a, q, p) = (self.anchor, self.first, self.second);
        [(q.0 - a.0, q.1 - a.1), (p.0 - a.0, p.1 - a.1)]
    }
}

/// `(H, 1, D)` followed by a global `(H, H, 1)` layer.
pub fn theorem3_spec(width: usize, rep_channels: usize, channels: usize, shared: bool) -> Result<NetworkSpec> {
    let first = LayerSpec { receptive: width, stride: 1, channels, shared };
    NetworkSpec::new(width, rep_channels, vec![first, LayerSpec::new(width, width, 1)])
}

/// Pairs the sorted halves of `partition` position by position and assigns
/// each pair a distinct anchor.
///
/// The componentwise minimum of the pair is tried first; collisions are
/// resolved by augmenting paths over all admissible anchors.
pub fn pair_anchors(width: usize, partition: &IndexPartition) -> Result<Vec<PairAnchor>> {
    if partition.order() != width * width {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} modes, grid has {}",
            partition.order(),
            width * width
        )));
    }
    if !partition.is_even() {
        return Err(Error::InvalidPartition(format!("{partition} is not an even split")));
    }
    let pos = |mode: usize| (mode / width, mode % width);
    let pairs: Vec<((usize, usize), (usize, usize))> = partition
        .rows()
        .iter()
        .zip(partition.cols())
        .map(|(&a, &b)| (pos(a.min(b)), pos(a.max(b))))
        .collect();

    // Admissible anchors per pair, best first.
    let candidates: Vec<Vec<usize>> = pairs
        .iter()
        .map(|&(q, p)| {
            let top = (q.0.min(p.0), q.1.min(p.1));
            let mut c: Vec<(usize, usize)> = (0..=top.0).flat_map(|j| (0..=top.1).map(move |i| (j, i))).collect();
            c.sort_by_key(|&(j, i)| (top.0 - j) + (top.1 - i));
            c.into_iter().map(|(j, i)| j * width + i).collect()
        })
        .collect();

    fn augment(k: usize, cand: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
        for &slot in &cand[k] {
            if seen[slot] {
                continue;
            }
            seen[slot] = true;
            if owner[slot].is_none_or(|other| augment(other, cand, owner, seen)) {
                owner[slot] = Some(k);
                return true;
            }
        }
        false
    }

    let mut owner = vec![None; width * width];
    for k in 0..pairs.len() {
        let mut seen = vec![false; width * width];
        if !augment(k, &candidates, &mut owner, &mut seen) {
            return Err(Error::Precondition(format!("no distinct anchors exist for {partition}")));
        }
    }
    let mut out: Vec<PairAnchor> = pairs
        .iter()
        .map(|&(first, second)| PairAnchor { first, second, anchor: (0, 0) })
        .collect();
    for (slot, k) in owner.iter().enumerate() {
        if let Some(k) = *k {
            out[k].anchor = pos(slot);
        }
    }
    Ok(out)
}

fn pair_filter(in_channels: usize, window: usize, pair: &PairAnchor, f_inv: &Matrix<Rational>, c: usize) -> Filter<Rational> {
    let mut f = Filter::constant(in_channels, window, Rational::from_int(1));
    for (j, i) in pair.offsets() {
        f.set_bias(j, i, Rational::from_int(0));
        for m in 0..in_channels {
            f.set_weight(m, j, i, f_inv.get(m, c).clone());
        }
    }
    f
}

/// Parameters for a spec shaped like [`theorem3_spec`]: first layer with
/// `S = 1` and `R >= H`, and the rest collapsing the `H x H` output in one
/// window. Unshared first layers need `D >= M`, shared ones `D >= M H^2`.
pub fn theorem3_params(
    spec: &NetworkSpec,
    partition: &IndexPartition,
    representation: &Matrix<Rational>,
) -> Result<NetworkParams<Rational>> {
    spec.require_collapsing()?;
    let h = spec.width();
    let m = spec.rep_channels();
    let first = spec.layers()[0];
    if first.stride != 1 || first.receptive < h {
        return Err(Error::Precondition(format!(
            "first layer must have S = 1 and R >= H, got R={} S={}",
            first.receptive, first.stride
        )));
    }
    if spec.depth() < 2 || spec.spatial_sizes()[2] != 1 {
        return Err(Error::Precondition("the second layer must collapse the grid in one window".into()));
    }
    let need = if first.shared { m * h * h } else { m };
    if first.channels < need {
        return Err(Error::Precondition(format!(
            "{} first layer needs D >= {need}, got {}",
            if first.shared { "shared" } else { "unshared" },
            first.channels
        )));
    }
    if representation.rows() != m || representation.cols() != m {
        return Err(Error::ShapeMismatch(format!("representation matrix must be {m}x{m}")));
    }
    let f_inv = representation.inverse()?;
    let pairs = pair_anchors(h, partition)?;
    let mut by_anchor: Vec<Option<PairAnchor>> = vec![None; h * h];
    for p in &pairs {
        by_anchor[p.anchor.0 * h + p.anchor.1] = Some(*p);
    }
    let zero = || Filter::constant(m, first.receptive, Rational::from_int(0));

    let layer1 = if first.shared {
        let filters = (0..first.channels)
            .map(|ch| {
                let (c, slot) = (ch / (h * h), ch % (h * h));
                match (c < m, by_anchor[slot]) {
                    (true, Some(pair)) => pair_filter(m, first.receptive, &pair, &f_inv, c),
                    _ => zero(),
                }
            })
            .collect();
        LayerParams::from_channel_filters(first, m, h, filters)?
    } else {
        LayerParams::from_fn(first, m, h, |c, u, v| match (c < m, by_anchor[u * h + v]) {
            (true, Some(pair)) => pair_filter(m, first.receptive, &pair, &f_inv, c),
            _ => zero(),
        })?
    };

    let select = |j: usize, i: usize| -> Vec<usize> {
        let slot = j * h + i;
        if j >= h || i >= h || by_anchor[slot].is_none() {
            return Vec::new();
        }
        if first.shared {
            (0..m).map(|c| c * h * h + slot).collect()
        } else {
            (0..m).collect()
        }
    };
    let mut layers = vec![layer1];
    layers.extend(tail_layers(spec, 1, select)?);
    Ok(NetworkParams::new(layers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{even_partitions, left_right_partition};

    #[test]
    fn anchors_are_distinct_and_dominated() {
        for h in [2, 4] {
            let parts = if h == 2 { even_partitions(4) } else { vec![left_right_partition(4).unwrap()] };
            for part in parts {
                let pairs = pair_anchors(h, &part).unwrap();
                assert_eq!(pairs.len(), h * h / 2);
                let mut seen = std::collections::HashSet::new();
                for p in &pairs {
                    assert!(seen.insert(p.anchor));
                    for (q, a) in [(p.first, p.anchor), (p.second, p.anchor)] {
                        assert!(a.0 <= q.0 && a.1 <= q.1);
                    }
                }
            }
        }
    }

    #[test]
    fn colliding_minima_are_rematched() {
        // Pairs {(0,1),(1,0)} and {(1,1),(0,0)}: the first pair's minimum is
        // (0,0), which the second pair also needs.
        let part = IndexPartition::new(vec![0, 1], vec![2, 3], 4).unwrap();
        let pairs = pair_anchors(2, &part).unwrap();
        let anchors: Vec<_> = pairs.iter().map(|p| p.anchor).collect();
        assert_ne!(anchors[0], anchors[1]);
    }

    #[test]
    fn channel_requirements() {
        let part = left_right_partition(2).unwrap();
        let f = Matrix::identity(2);
        assert!(theorem3_params(&theorem3_spec(2, 2, 1, false).unwrap(), &part, &f).is_err());
        assert!(theorem3_params(&theorem3_spec(2, 2, 7, true).unwrap(), &part, &f).is_err());
        assert!(theorem3_params(&theorem3_spec(2, 2, 8, true).unwrap(), &part, &f).is_ok());
        assert!(theorem3_params(&theorem3_spec(2, 2, 2, false).unwrap(), &part, &f).is_ok());
    }
}
