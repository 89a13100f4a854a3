//! Realizing a smaller network inside a larger one.
//!
//! A layer can imitate a smaller window by zeroing the extra weights and
//! setting the extra biases to one, and a stride-1 layer can act as the
//! identity. Together these lift parameters of a network with smaller
//! windows and fewer stride-1 layers onto the larger architecture.

use crate::error::{Error, Result};
use crate::network::{Filter, LayerParams, LayerSpec, NetworkParams, NetworkSpec};
use crate::scalar::Scalar;

fn embed_filter<T: Scalar>(small: &Filter<T>, window: usize, in_channels: usize) -> Filter<T> {
    let mut big = Filter::constant(in_channels, window, T::one());
    for j in 0..small.window() {
        for i in 0..small.window() {
            big.set_bias(j, i, small.bias(j, i).clone());
            for d in 0..small.in_channels() {
                big.set_weight(d, j, i, small.weight(d, j, i).clone());
            }
        }
    }
    big
}

/// Embeds `params` (window `R~`) into a layer with window `receptive >= R~`.
///
/// Matching coordinates are copied; the new weights are zero and the new
/// biases one, so the output is unchanged for every input.
pub fn shrink_receptive<T: Scalar>(params: &LayerParams<T>, receptive: usize) -> Result<LayerParams<T>> {
    embed_layer(params, params.spec().with_receptive(receptive), params.in_channels())
}

/// Generalizes [`shrink_receptive`]: the target may also have more input
/// channels (extra weights are zero) and may be unshared where the source
/// is shared (filters are replicated per position).
pub fn embed_layer<T: Scalar>(params: &LayerParams<T>, target: LayerSpec, in_channels: usize) -> Result<LayerParams<T>> {
    let src = params.spec();
    if target.receptive < src.receptive {
        return Err(Error::Precondition(format!(
            "cannot embed a {0}x{0} window into a smaller {1}x{1} one",
            src.receptive, target.receptive
        )));
    }
    if target.stride != src.stride || target.channels != src.channels {
        return Err(Error::Precondition(format!(
            "embedding needs equal stride and channel count ({src:?} vs {target:?})"
        )));
    }
    if in_channels < params.in_channels() {
        return Err(Error::Precondition(format!(
            "target has {in_channels} input channels, fewer than the source's {}",
            params.in_channels()
        )));
    }
    if target.shared && !src.shared {
        return Err(Error::Precondition("a shared layer cannot realize unshared parameters".into()));
    }
    LayerParams::from_fn(target, in_channels, params.out_size(), |c, u, v| {
        embed_filter(params.filter(c, u, v), target.receptive, in_channels)
    })
}

/// Parameters making a stride-1 layer the identity on its first `in_channels`
/// channels; channels beyond that output zero.
pub fn identity_params<T: Scalar>(spec: LayerSpec, in_channels: usize, size: usize) -> Result<LayerParams<T>> {
    if spec.stride != 1 {
        return Err(Error::Precondition(format!(
            "identity needs stride 1, layer has stride {}",
            spec.stride
        )));
    }
    if spec.channels < in_channels {
        return Err(Error::Precondition(format!(
            "identity needs D_out >= D_in, got {} < {in_channels}",
            spec.channels
        )));
    }
    let unit = LayerSpec { receptive: 1, ..spec };
    let filters = (0..spec.channels)
        .map(|c| {
            let mut f = Filter::constant(in_channels, 1, T::zero());
            if c < in_channels {
                f.set_weight(c, 0, 0, T::one());
            }
            f
        })
        .collect();
    let unit_params = LayerParams::from_channel_filters(unit, in_channels, size, filters)?;
    shrink_receptive(&unit_params, spec.receptive)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftStep {
    /// Realizes the given (0-based) layer of the smaller network.
    Match(usize),
    /// Acts as the identity.
    Identity,
}

/// Finds how `small` sits inside `big`: every layer of `big` either matches
/// the next layer of `small` (same stride and channels, window at least as
/// large) or is a stride-1 layer turned into the identity.
pub fn align(big: &NetworkSpec, small: &NetworkSpec) -> Result<Vec<LiftStep>> {
    if big.width() != small.width() || big.rep_channels() != small.rep_channels() {
        return Err(Error::Precondition(format!(
            "networks differ in representation (H={}, M={} vs H={}, M={})",
            big.width(),
            big.rep_channels(),
            small.width(),
            small.rep_channels()
        )));
    }

    fn search(
        big: &[LayerSpec],
        small: &[LayerSpec],
        channels: usize,
        small_idx: usize,
        steps: &mut Vec<LiftStep>,
    ) -> bool {
        let Some((a, rest)) = big.split_first() else {
            return small_idx == small.len();
        };
        if let Some(b) = small.get(small_idx) {
            let compatible = a.stride == b.stride
                && a.receptive >= b.receptive
                && a.channels == b.channels
                && !(a.shared && !b.shared);
            if compatible {
                steps.push(LiftStep::Match(small_idx));
                if search(rest, small, a.channels, small_idx + 1, steps) {
                    return true;
                }
                steps.pop();
            }
        }
        if a.stride == 1 && a.channels >= channels {
            steps.push(LiftStep::Identity);
            if search(rest, small, a.channels, small_idx, steps) {
                return true;
            }
            steps.pop();
        }
        false
    }

    let mut steps = Vec::new();
    let m = big.rep_channels();
    if search(big.layers(), small.layers(), m, 0, &mut steps) {
        Ok(steps)
    } else {
        Err(Error::Precondition(
            "the smaller network cannot be obtained by shrinking windows and deleting stride-1 layers".into(),
        ))
    }
}

/// Lifts parameters of `small` onto `big` so both compute the same function
/// on the first `D` output channels of `small`.
pub fn lift_params<T: Scalar>(
    big: &NetworkSpec,
    small: &NetworkSpec,
    small_params: &NetworkParams<T>,
) -> Result<NetworkParams<T>> {
    small_params.check_against(small)?;
    let steps = align(big, small)?;
    let sizes = big.spatial_sizes();
    let mut layers = Vec::with_capacity(big.depth());
    for (idx, (step, spec)) in steps.iter().zip(big.layers()).enumerate() {
        let in_channels = big.input_channels(idx);
        let layer = match *step {
            LiftStep::Match(k) => embed_layer(&small_params.layers()[k], *spec, in_channels)?,
            LiftStep::Identity => identity_params(*spec, in_channels, sizes[idx + 1])?,
        };
        layers.push(layer);
    }
    Ok(NetworkParams::new(layers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::forward_layer;
    use num_traits::Zero;
    use crate::scalar::Rational;
    use crate::tensor::DenseTensor;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn sample_layer(spec: LayerSpec, in_channels: usize, out_size: usize, salt: i64) -> LayerParams<Rational> {
        let mut k = salt;
        let mut next = move || {
            k = (k * 37 + 11) % 97;
            q(k % 7 - 3, 2)
        };
        LayerParams::from_fn(spec, in_channels, out_size, |_, _, _| {
            let r = spec.receptive;
            let w = (0..in_channels * r * r).map(|_| next()).collect();
            let b = (0..r * r).map(|_| next()).collect();
            Filter::new(in_channels, r, w, b).unwrap()
        })
        .unwrap()
    }

    fn sample_input(channels: usize, size: usize, salt: i64) -> DenseTensor<Rational> {
        DenseTensor::from_fn(vec![channels, size, size], |i| {
            q(((i[0] * 31 + i[1] * 7 + i[2] * 3) as i64 + salt) % 9 - 4, 3)
        })
    }

    #[test]
    fn shrink_to_same_window_is_unchanged() {
        let p = sample_layer(LayerSpec::new(2, 1, 2), 2, 3, 5);
        assert_eq!(shrink_receptive(&p, 2).unwrap(), p);
        assert!(shrink_receptive(&p, 1).is_err());
    }

    #[test]
    fn shrink_preserves_outputs() {
        let small = sample_layer(LayerSpec::new(1, 1, 2), 2, 4, 1);
        let big = shrink_receptive(&small, 3).unwrap();
        for salt in 0..20 {
            let x = sample_input(2, 4, salt);
            assert_eq!(forward_layer(&x, &small).unwrap(), forward_layer(&x, &big).unwrap());
        }
        let small = sample_layer(LayerSpec::unshared(2, 2, 3), 2, 2, 9);
        let big = shrink_receptive(&small, 3).unwrap();
        for salt in 0..20 {
            let x = sample_input(2, 4, salt);
            assert_eq!(forward_layer(&x, &small).unwrap(), forward_layer(&x, &big).unwrap());
        }
    }

    #[test]
    fn identity_layers() {
        let x = sample_input(2, 3, 4);
        for r in [1, 3] {
            let id = identity_params::<Rational>(LayerSpec::new(r, 1, 2), 2, 3).unwrap();
            assert_eq!(forward_layer(&x, &id).unwrap(), x);
        }
        let wide = identity_params::<Rational>(LayerSpec::unshared(2, 1, 3), 2, 3).unwrap();
        let y = forward_layer(&x, &wide).unwrap();
        assert_eq!(&y.data()[..18], x.data());
        assert!(y.data()[18..].iter().all(|v| v.is_zero()));

        let mut y = x.clone();
        for _ in 0..3 {
            y = forward_layer(&y, &identity_params(LayerSpec::new(2, 1, 2), 2, 3).unwrap()).unwrap();
        }
        assert_eq!(y, x);

        assert!(identity_params::<Rational>(LayerSpec::new(1, 2, 2), 2, 3).is_err());
        assert!(identity_params::<Rational>(LayerSpec::new(1, 1, 1), 2, 3).is_err());
    }

    #[test]
    fn alignment_prefers_matches_and_backtracks() {
        let big = NetworkSpec::new(
            4,
            2,
            vec![LayerSpec::new(3, 1, 2), LayerSpec::new(3, 1, 4), LayerSpec::new(2, 2, 4), LayerSpec::new(2, 2, 1)],
        )
        .unwrap();
        let small = NetworkSpec::new(4, 2, vec![LayerSpec::new(2, 1, 4), LayerSpec::new(2, 2, 4), LayerSpec::new(2, 2, 1)])
            .unwrap();
        // The first big layer has only 2 channels, so it must become the identity.
        assert_eq!(
            align(&big, &small).unwrap(),
            vec![LiftStep::Identity, LiftStep::Match(0), LiftStep::Match(1), LiftStep::Match(2)]
        );
        let impossible = NetworkSpec::new(4, 2, vec![LayerSpec::new(4, 4, 1)]).unwrap();
        assert!(align(&big, &impossible).is_err());
    }
}
