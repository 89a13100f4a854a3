//! Seeded random parameters drawn from a finite grid of rationals.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{Filter, LayerParams, NetworkParams, NetworkSpec};
use crate::scalar::{Rational, Scalar};
use crate::tensor::DenseTensor;

/// `{-3, ..., 3} \ {0}` scaled by `1/2`.
pub fn default_value_grid() -> Vec<Rational> {
    (-3..=3).filter(|&k| k != 0).map(|k| Rational::from_ratio(k, 2)).collect()
}

/// `{k/7 : 1 <= |k| <= 50}`, fine enough that coincidental degeneracies are
/// rare.
pub fn fine_value_grid() -> Vec<Rational> {
    (-50..=50).filter(|&k| k != 0).map(|k| Rational::from_ratio(k, 7)).collect()
}

fn draw(rng: &mut ChaCha8Rng, grid: &[Rational]) -> Rational {
    grid.choose(rng).expect("value grid is non-empty").clone()
}

/// Every weight and bias of every layer drawn independently and uniformly
/// from `grid`. The same seed always gives the same parameters.
pub fn random_params(spec: &NetworkSpec, seed: u64, grid: &[Rational]) -> Result<NetworkParams<Rational>> {
    if grid.is_empty() {
        return Err(Error::Precondition("value grid is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = spec.spatial_sizes();
    let mut layers = Vec::with_capacity(spec.depth());
    for (idx, layer) in spec.layers().iter().enumerate() {
        let in_channels = spec.input_channels(idx);
        let r = layer.receptive;
        let params = LayerParams::from_fn(*layer, in_channels, sizes[idx + 1], |_, _, _| {
            let weights = (0..in_channels * r * r).map(|_| draw(&mut rng, grid)).collect();
            let biases = (0..r * r).map(|_| draw(&mut rng, grid)).collect();
            Filter::new(in_channels, r, weights, biases).expect("sizes match the layer")
        })?;
        layers.push(params);
    }
    Ok(NetworkParams::new(layers))
}

/// A `channels x size x size` input with entries from `grid`.
pub fn random_input(rng: &mut ChaCha8Rng, channels: usize, size: usize, grid: &[Rational]) -> DenseTensor<Rational> {
    DenseTensor::from_fn(vec![channels, size, size], |_| draw(rng, grid))
}

/// A nonsingular `m x m` representation matrix with entries from `grid`.
pub fn random_representation(m: usize, seed: u64, grid: &[Rational]) -> Result<Matrix<Rational>> {
    if grid.iter().all(|v| *v == Rational::from_int(0)) {
        return Err(Error::Precondition("value grid has no nonzero entry".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let f = Matrix::from_fn(m, m, |_, _| draw(&mut rng, grid));
        if f.rank()? == m {
            return Ok(f);
        }
    }
}
