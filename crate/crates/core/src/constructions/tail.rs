//! Sum-then-product tail: the first tail layer adds up selected channels at
//! each position, every later layer multiplies channel 0 over its window,
//! so the network ends in the global product of the per-position sums.

use crate::error::{Error, Result};
use crate::network::{Filter, LayerParams, NetworkSpec};
use crate::scalar::Scalar;

/// Parameters for layers `first..L` of `spec` (0-based).
///
/// `select(j, i)` lists the input channels summed at window offset `(j, i)`
/// of the first tail layer; an empty list makes that offset a constant 1.
/// Each layer only uses the `t x t` corner of its window, `t = min(S, H_in)`,
/// so windows tile the input exactly. Output channels other than 0 are zero.
pub fn tail_layers<T: Scalar>(
    spec: &NetworkSpec,
    first: usize,
    select: impl Fn(usize, usize) -> Vec<usize>,
) -> Result<Vec<LayerParams<T>>> {
    if first >= spec.depth() {
        return Err(Error::Precondition(format!(
            "the tail needs at least one layer after layer {first}"
        )));
    }
    let sizes = spec.spatial_sizes();
    let mut out = Vec::with_capacity(spec.depth() - first);
    for idx in first..spec.depth() {
        let layer = spec.layers()[idx];
        let h_in = sizes[idx];
        let t = layer.stride.min(h_in);
        if layer.receptive < t || (h_in > layer.stride && !h_in.is_multiple_of(layer.stride)) {
            return Err(Error::Precondition(format!(
                "tail layer {} (R={}, S={}) cannot tile its {h_in}x{h_in} input",
                idx + 1,
                layer.receptive,
                layer.stride
            )));
        }
        let in_channels = spec.input_channels(idx);
        let r = layer.receptive;
        let mut product = Filter::constant(in_channels, r, T::one());
        for j in 0..t {
            for i in 0..t {
                let chosen = if idx == first { select(j, i) } else { vec![0] };
                if chosen.is_empty() {
                    continue;
                }
                product.set_bias(j, i, T::zero());
                for d in chosen {
                    if d >= in_channels {
                        return Err(Error::Precondition(format!(
                            "tail layer {} has no input channel {}",
                            idx + 1,
                            d + 1
                        )));
                    }
                    product.set_weight(d, j, i, T::one());
                }
            }
        }
        let mut filters = vec![product];
        filters.extend((1..layer.channels).map(|_| Filter::constant(in_channels, r, T::zero())));
        out.push(LayerParams::from_channel_filters(layer, in_channels, sizes[idx + 1], filters)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{forward_layer, LayerSpec};
    use crate::scalar::Rational;
    use crate::tensor::DenseTensor;

    fn run(layers: &[LayerParams<Rational>], x: DenseTensor<Rational>) -> DenseTensor<Rational> {
        layers.iter().fold(x, |acc, l| forward_layer(&acc, l).unwrap())
    }

    #[test]
    fn global_product_of_channel_sums() {
        // Input 3 x 4 x 4 fed to (2,2,2) then (3,2,1): the tail multiplies
        // x0 + x2 over all 16 positions.
        let spec = NetworkSpec::new(
            4,
            3,
            vec![LayerSpec::new(2, 2, 2), LayerSpec::new(3, 2, 1)],
        )
        .unwrap();
        let layers = tail_layers::<Rational>(&spec, 0, |_, _| vec![0, 2]).unwrap();
        let x = DenseTensor::from_fn(vec![3, 4, 4], |i| Rational::from_int((i[0] * 5 + i[1] * 3 + i[2] + 1) as i64 % 7));
        let mut expected = Rational::from_int(1);
        for j in 0..4 {
            for i in 0..4 {
                expected = expected * (x.get(&[0, j, i]).clone() + x.get(&[2, j, i]).clone());
            }
        }
        let y = run(&layers, x);
        assert_eq!(y.data(), &[expected]);
    }

    #[test]
    fn extra_channels_are_zero_and_selection_is_per_offset() {
        let spec = NetworkSpec::new(2, 2, vec![LayerSpec::unshared(2, 2, 3)]).unwrap();
        let layers = tail_layers::<Rational>(&spec, 0, |j, i| if (j, i) == (0, 1) { vec![1] } else { vec![] }).unwrap();
        let x = DenseTensor::from_fn(vec![2, 2, 2], |i| Rational::from_int((i[0] * 4 + i[1] * 2 + i[2]) as i64 + 2));
        let y = run(&layers, x);
        assert_eq!(y.data()[0], Rational::from_int(7));
        assert_eq!(&y.data()[1..], &[Rational::from_int(0), Rational::from_int(0)]);
    }

    #[test]
    fn rejects_windows_that_cannot_tile() {
        let spec = NetworkSpec::new(6, 1, vec![LayerSpec::new(1, 4, 1), LayerSpec::new(2, 2, 1)]).unwrap();
        assert!(tail_layers::<Rational>(&spec, 0, |_, _| vec![0]).is_err());
        let spec = NetworkSpec::new(4, 1, vec![LayerSpec::new(1, 2, 1), LayerSpec::new(2, 2, 1)]).unwrap();
        assert!(tail_layers::<Rational>(&spec, 0, |_, _| vec![0]).is_err());
        assert!(tail_layers::<Rational>(&spec, 2, |_, _| vec![0]).is_err());
        assert!(tail_layers::<Rational>(&spec, 1, |_, _| vec![3]).is_err());
    }
}
