//! Generalized-convolution (GC) layers with product pooling.
//!
//! A layer with window `R`, stride `S` and `D` output channels maps a
//! `D_in x H_in x H_in` input to `D x H_out x H_out`, `H_out = ceil(H_in / S)`:
//!
//! ```text
//! Y[c,u,v] = prod_{j,i < R} ( b[j,i] + sum_d w[d,j,i] * X[d, u*S + j, v*S + i] )
//! ```
//!
//! Windows are anchored at the top-left and inputs outside the grid read as
//! zero, so a factor whose position falls off the grid equals its bias.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;

fn default_shared() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    #[serde(rename = "R")]
    pub receptive: usize,
    #[serde(rename = "S")]
    pub stride: usize,
    #[serde(rename = "D")]
    pub channels: usize,
    #[serde(default = "default_shared")]
    pub shared: bool,
}

impl LayerSpec {
    pub fn new(receptive: usize, stride: usize, channels: usize) -> Self {
        Self { receptive, stride, channels, shared: true }
    }

    pub fn unshared(receptive: usize, stride: usize, channels: usize) -> Self {
        Self { receptive, stride, channels, shared: false }
    }

    pub fn with_receptive(self, receptive: usize) -> Self {
        Self { receptive, ..self }
    }

    pub fn is_overlapping(&self) -> bool {
        self.receptive > self.stride
    }

    pub fn output_size(&self, input_size: usize) -> usize {
        input_size.div_ceil(self.stride)
    }

    fn check(&self, index: usize) -> Result<()> {
        if self.receptive == 0 || self.stride == 0 || self.channels == 0 {
            return Err(Error::InvalidSpec(format!(
                "layer {} needs R, S, D >= 1 (got R={}, S={}, D={})",
                index + 1,
                self.receptive,
                self.stride,
                self.channels
            )));
        }
        Ok(())
    }
}

/// Representation width `H`, representation channels `M`, and the GC layers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NetworkSpec {
    width: usize,
    rep_channels: usize,
    layers: Vec<LayerSpec>,
}

/// Shape summary produced by [`NetworkSpec::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetworkReport {
    /// `H^(0) = H, H^(1), ..., H^(L)`.
    pub spatial_sizes: Vec<usize>,
    /// `M, D^(1), ..., D^(L)`.
    pub channels: Vec<usize>,
    pub collapsing: bool,
    pub non_overlapping: bool,
    /// 1-based indices of layers with `R > S`.
    pub overlapping_layers: Vec<usize>,
}

impl NetworkSpec {
    pub fn new(width: usize, rep_channels: usize, layers: Vec<LayerSpec>) -> Result<Self> {
        if width == 0 || rep_channels == 0 {
            return Err(Error::InvalidSpec(format!(
                "H and M must be positive (got H={width}, M={rep_channels})"
            )));
        }
        if layers.is_empty() {
            return Err(Error::InvalidSpec("a network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            l.check(i)?;
        }
        Ok(Self { width, rep_channels, layers })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rep_channels(&self) -> usize {
        self.rep_channels
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Grid-tensor order `N = H^2`.
    pub fn grid_order(&self) -> usize {
        self.width * self.width
    }

    pub fn spatial_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.layers.len() + 1);
        let mut h = self.width;
        sizes.push(h);
        for l in &self.layers {
            h = l.output_size(h);
            sizes.push(h);
        }
        sizes
    }

    /// Spatial size of the input to layer `index` (0-based).
    pub fn input_size(&self, index: usize) -> usize {
        self.spatial_sizes()[index]
    }

    /// Channel count of the input to layer `index` (0-based).
    pub fn input_channels(&self, index: usize) -> usize {
        if index == 0 {
            self.rep_channels
        } else {
            self.layers[index - 1].channels
        }
    }

    pub fn output_channels(&self) -> usize {
        self.layers.last().map_or(self.rep_channels, |l| l.channels)
    }

    pub fn is_collapsing(&self) -> bool {
        self.spatial_sizes().last() == Some(&1)
    }

    pub fn is_non_overlapping(&self) -> bool {
        self.layers.iter().all(|l| l.receptive == l.stride)
    }

    pub fn require_collapsing(&self) -> Result<()> {
        let last = *self.spatial_sizes().last().unwrap_or(&self.width);
        if last != 1 {
            return Err(Error::NotCollapsing(last));
        }
        Ok(())
    }

    pub fn validate(&self) -> NetworkReport {
        let mut channels = vec![self.rep_channels];
        channels.extend(self.layers.iter().map(|l| l.channels));
        NetworkReport {
            spatial_sizes: self.spatial_sizes(),
            channels,
            collapsing: self.is_collapsing(),
            non_overlapping: self.is_non_overlapping(),
            overlapping_layers: self
                .layers
                .iter()
                .enumerate()
                .filter(|(_, l)| l.is_overlapping())
                .map(|(i, _)| i + 1)
                .collect(),
        }
    }
}

/// Weights `w[d, j, i]` and biases `b[j, i]` of one output channel (at one
/// position, for unshared layers).
#[derive(Debug, Clone, PartialEq)]
pub struct Filter<T> {
    in_channels: usize,
    window: usize,
    weights: Vec<T>,
    biases: Vec<T>,
}

impl<T: Scalar> Filter<T> {
    pub fn new(in_channels: usize, window: usize, weights: Vec<T>, biases: Vec<T>) -> Result<Self> {
        if weights.len() != in_channels * window * window || biases.len() != window * window {
            return Err(Error::ShapeMismatch(format!(
                "filter with {in_channels} input channels and window {window} needs {} weights and {} biases, got {} and {}",
                in_channels * window * window,
                window * window,
                weights.len(),
                biases.len()
            )));
        }
        Ok(Self { in_channels, window, weights, biases })
    }

    /// All weights zero, every bias equal to `bias`.
    pub fn constant(in_channels: usize, window: usize, bias: T) -> Self {
        Self {
            in_channels,
            window,
            weights: vec![T::zero(); in_channels * window * window],
            biases: vec![bias; window * window],
        }
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn biases(&self) -> &[T] {
        &self.biases
    }

    pub fn weight(&self, d: usize, j: usize, i: usize) -> &T {
        &self.weights[(d * self.window + j) * self.window + i]
    }

    pub fn set_weight(&mut self, d: usize, j: usize, i: usize, value: T) {
        self.weights[(d * self.window + j) * self.window + i] = value;
    }

    pub fn bias(&self, j: usize, i: usize) -> &T {
        &self.biases[j * self.window + i]
    }

    pub fn set_bias(&mut self, j: usize, i: usize, value: T) {
        self.biases[j * self.window + i] = value;
    }

    pub fn map<U: Scalar>(&self, mut f: impl FnMut(&T) -> U) -> Filter<U> {
        Filter {
            in_channels: self.in_channels,
            window: self.window,
            weights: self.weights.iter().map(&mut f).collect(),
            biases: self.biases.iter().map(&mut f).collect(),
        }
    }
}

/// Parameters of one GC layer.
///
/// Shared layers hold one filter per output channel; unshared layers hold
/// one per `(channel, u, v)`, stored densely at `c * H_out^2 + u * H_out + v`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T> {
    spec: LayerSpec,
    in_channels: usize,
    out_size: usize,
    filters: Vec<Filter<T>>,
}

impl<T: Scalar> LayerParams<T> {
    pub fn new(spec: LayerSpec, in_channels: usize, out_size: usize, filters: Vec<Filter<T>>) -> Result<Self> {
        let expected = if spec.shared {
            spec.channels
        } else {
            spec.channels * out_size * out_size
        };
        if filters.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "layer with D={} ({}) needs {expected} filters, got {}",
                spec.channels,
                if spec.shared { "shared" } else { "unshared" },
                filters.len()
            )));
        }
        if let Some(bad) = filters
            .iter()
            .find(|f| f.in_channels != in_channels || f.window != spec.receptive)
        {
            return Err(Error::ShapeMismatch(format!(
                "filter has {} input channels and window {}, layer expects {in_channels} and {}",
                bad.in_channels, bad.window, spec.receptive
            )));
        }
        Ok(Self { spec, in_channels, out_size, filters })
    }

    /// Builds every filter from `f(c, u, v)`; for shared layers `u = v = 0`.
    pub fn from_fn(
        spec: LayerSpec,
        in_channels: usize,
        out_size: usize,
        mut f: impl FnMut(usize, usize, usize) -> Filter<T>,
    ) -> Result<Self> {
        let mut filters = Vec::new();
        for c in 0..spec.channels {
            if spec.shared {
                filters.push(f(c, 0, 0));
            } else {
                for u in 0..out_size {
                    for v in 0..out_size {
                        filters.push(f(c, u, v));
                    }
                }
            }
        }
        Self::new(spec, in_channels, out_size, filters)
    }

    /// One filter per channel, replicated to every position when unshared.
    pub fn from_channel_filters(
        spec: LayerSpec,
        in_channels: usize,
        out_size: usize,
        per_channel: Vec<Filter<T>>,
    ) -> Result<Self> {
        if per_channel.len() != spec.channels {
            return Err(Error::ShapeMismatch(format!(
                "expected {} channel filters, got {}",
                spec.channels,
                per_channel.len()
            )));
        }
        Self::from_fn(spec, in_channels, out_size, |c, _, _| per_channel[c].clone())
    }

    pub fn spec(&self) -> &LayerSpec {
        &self.spec
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_size(&self) -> usize {
        self.out_size
    }

    pub fn filters(&self) -> &[Filter<T>] {
        &self.filters
    }

    pub fn filter(&self, c: usize, u: usize, v: usize) -> &Filter<T> {
        if self.spec.shared {
            &self.filters[c]
        } else {
            &self.filters[(c * self.out_size + u) * self.out_size + v]
        }
    }

    pub fn map<U: Scalar>(&self, mut f: impl FnMut(&T) -> U) -> LayerParams<U> {
        LayerParams {
            spec: self.spec,
            in_channels: self.in_channels,
            out_size: self.out_size,
            filters: self.filters.iter().map(|flt| flt.map(&mut f)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T> {
    layers: Vec<LayerParams<T>>,
}

impl<T: Scalar> NetworkParams<T> {
    pub fn new(layers: Vec<LayerParams<T>>) -> Self {
        Self { layers }
    }

    pub fn layers(&self) -> &[LayerParams<T>] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<LayerParams<T>> {
        self.layers
    }

    pub fn map<U: Scalar>(&self, mut f: impl FnMut(&T) -> U) -> NetworkParams<U> {
        NetworkParams { layers: self.layers.iter().map(|l| l.map(&mut f)).collect() }
    }

    pub fn to_f64(&self) -> NetworkParams<f64> {
        self.map(|x| x.to_f64())
    }

    /// Checks layer specs, channel chain and output sizes against `spec`.
    pub fn check_against(&self, spec: &NetworkSpec) -> Result<()> {
        if self.layers.len() != spec.depth() {
            return Err(Error::ShapeMismatch(format!(
                "spec has {} layers, params have {}",
                spec.depth(),
                self.layers.len()
            )));
        }
        let sizes = spec.spatial_sizes();
        for (idx, (lp, ls)) in self.layers.iter().zip(spec.layers()).enumerate() {
            if lp.spec != *ls {
                return Err(Error::ShapeMismatch(format!(
                    "layer {}: params were built for {:?}, spec says {:?}",
                    idx + 1,
                    lp.spec,
                    ls
                )));
            }
            if lp.in_channels != spec.input_channels(idx) || lp.out_size != sizes[idx + 1] {
                return Err(Error::ShapeMismatch(format!(
                    "layer {}: params expect {} input channels and output size {}, spec gives {} and {}",
                    idx + 1,
                    lp.in_channels,
                    lp.out_size,
                    spec.input_channels(idx),
                    sizes[idx + 1]
                )));
            }
        }
        Ok(())
    }
}

/// Evaluates one GC layer with product pooling.
pub fn forward_layer<T: Scalar>(input: &DenseTensor<T>, params: &LayerParams<T>) -> Result<DenseTensor<T>> {
    let dims = input.dims();
    if dims.len() != 3 || dims[1] != dims[2] {
        return Err(Error::ShapeMismatch(format!(
            "layer input must be D x H x H, got {dims:?}"
        )));
    }
    let (d_in, h_in) = (dims[0], dims[1]);
    if d_in != params.in_channels {
        return Err(Error::ShapeMismatch(format!(
            "layer expects {} input channels, got {d_in}",
            params.in_channels
        )));
    }
    let spec = params.spec;
    let h_out = spec.output_size(h_in);
    if h_out != params.out_size {
        return Err(Error::ShapeMismatch(format!(
            "params were built for output size {}, input gives {h_out}",
            params.out_size
        )));
    }

    let x = input.data();
    let (r, s) = (spec.receptive, spec.stride);
    let mut out = Vec::with_capacity(spec.channels * h_out * h_out);
    for c in 0..spec.channels {
        for u in 0..h_out {
            for v in 0..h_out {
                let filter = params.filter(c, u, v);
                let mut prod = T::one();
                'window: for j in 0..r {
                    let row = u * s + j;
                    for i in 0..r {
                        let col = v * s + i;
                        let mut factor = filter.bias(j, i).clone();
                        if row < h_in && col < h_in {
                            for d in 0..d_in {
                                factor.add_product(filter.weight(d, j, i), &x[(d * h_in + row) * h_in + col]);
                            }
                        }
                        if factor.is_zero() {
                            prod = T::zero();
                            break 'window;
                        }
                        prod.mul_by(&factor);
                    }
                }
                out.push(prod);
            }
        }
    }
    DenseTensor::new(vec![spec.channels, h_out, h_out], out)
}

/// Runs every layer in order on the representation output `M x H x H`.
pub fn forward_network<T: Scalar>(
    spec: &NetworkSpec,
    params: &NetworkParams<T>,
    rep_output: &DenseTensor<T>,
) -> Result<DenseTensor<T>> {
    params.check_against(spec)?;
    let expected = [spec.rep_channels, spec.width, spec.width];
    if rep_output.dims() != expected {
        return Err(Error::ShapeMismatch(format!(
            "representation output must be {expected:?}, got {:?}",
            rep_output.dims()
        )));
    }
    let mut current = forward_layer(rep_output, &params.layers[0])?;
    for layer in &params.layers[1..] {
        current = forward_layer(&current, layer)?;
    }
    Ok(current)
}

/// Score vector `h` of a collapsing network (length `D^(L)`).
pub fn network_scores<T: Scalar>(
    spec: &NetworkSpec,
    params: &NetworkParams<T>,
    rep_output: &DenseTensor<T>,
) -> Result<Vec<T>> {
    spec.require_collapsing()?;
    Ok(forward_network(spec, params, rep_output)?.into_data())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use num_traits::{One, Zero};

    fn q(n: i64) -> Rational {
        Rational::from_int(n)
    }

    fn all_ones_filter(in_channels: usize, window: usize) -> Filter<Rational> {
        Filter::new(
            in_channels,
            window,
            vec![Rational::one(); in_channels * window * window],
            vec![Rational::zero(); window * window],
        )
        .unwrap()
    }

    #[test]
    fn one_by_one_channel_identity_is_identity() {
        let spec = LayerSpec::new(1, 1, 3);
        let params = LayerParams::from_fn(spec, 3, 2, |c, _, _| {
            let mut f = Filter::constant(3, 1, Rational::zero());
            f.set_weight(c, 0, 0, Rational::one());
            f
        })
        .unwrap();
        let x = DenseTensor::from_fn(vec![3, 2, 2], |i| q((i[0] * 4 + i[1] * 2 + i[2]) as i64 - 5));
        assert_eq!(forward_layer(&x, &params).unwrap(), x);
    }

    #[test]
    fn single_window_product() {
        let spec = LayerSpec::new(2, 2, 1);
        let params = LayerParams::from_channel_filters(spec, 1, 1, vec![all_ones_filter(1, 2)]).unwrap();
        let x = DenseTensor::new(vec![1, 2, 2], vec![q(1), q(2), q(3), q(4)]).unwrap();
        let y = forward_layer(&x, &params).unwrap();
        assert_eq!(y.dims(), &[1, 1, 1]);
        assert_eq!(y.data(), &[q(24)]);
    }

    #[test]
    fn zero_padding_contributes_bias_factors() {
        // H_in = 2, R = 2, S = 1: windows at (0,1), (1,0), (1,1) spill over.
        let spec = LayerSpec::new(2, 1, 1);
        let filter = Filter::new(1, 2, vec![q(1); 4], vec![q(5); 4]).unwrap();
        let params = LayerParams::from_channel_filters(spec, 1, 2, vec![filter]).unwrap();
        let x = DenseTensor::new(vec![1, 2, 2], vec![q(1), q(2), q(3), q(4)]).unwrap();
        let y = forward_layer(&x, &params).unwrap();
        assert_eq!(y.dims(), &[1, 2, 2]);
        // (0,0): (5+1)(5+2)(5+3)(5+4); (0,1): (5+2)*5*(5+4)*5
        // (1,0): (5+3)(5+4)*5*5;      (1,1): (5+4)*5*5*5
        assert_eq!(y.data(), &[q(6 * 7 * 8 * 9), q(7 * 5 * 9 * 5), q(8 * 9 * 25), q(9 * 125)]);
    }

    #[test]
    fn window_entirely_outside_is_product_of_biases() {
        // H_in = 3, R = 1, S = 2 never leaves the grid; R = 4 at S = 2 does.
        let spec = LayerSpec::new(4, 2, 1);
        let filter = Filter::new(1, 4, vec![q(1); 16], (0..16).map(|k| q(k % 3 + 1)).collect()).unwrap();
        let params = LayerParams::from_channel_filters(spec, 1, 2, vec![filter.clone()]).unwrap();
        let x = DenseTensor::from_fn(vec![1, 3, 3], |_| q(0));
        let y = forward_layer(&x, &params).unwrap();
        let expected: Rational = filter.biases().iter().cloned().fold(q(1), |a, b| a * b);
        assert!(y.data().iter().all(|v| *v == expected));
    }

    #[test]
    fn unshared_layers_index_filters_by_position() {
        let spec = LayerSpec::unshared(1, 1, 1);
        let params = LayerParams::from_fn(spec, 1, 2, |_, u, v| {
            Filter::new(1, 1, vec![q(1)], vec![q((u * 2 + v) as i64 * 10)]).unwrap()
        })
        .unwrap();
        let x = DenseTensor::new(vec![1, 2, 2], vec![q(1), q(2), q(3), q(4)]).unwrap();
        assert_eq!(forward_layer(&x, &params).unwrap().data(), &[q(1), q(12), q(23), q(34)]);
    }

    #[test]
    fn stacked_non_overlapping_layers_collapse() {
        let spec = NetworkSpec::new(4, 2, vec![LayerSpec::new(2, 2, 3), LayerSpec::new(2, 2, 1)]).unwrap();
        assert_eq!(spec.spatial_sizes(), vec![4, 2, 1]);
        assert!(spec.is_collapsing());
        assert!(spec.is_non_overlapping());
        let report = spec.validate();
        assert_eq!(report.channels, vec![2, 3, 1]);
        assert!(report.overlapping_layers.is_empty());
    }

    #[test]
    fn spec_validation_errors() {
        assert!(NetworkSpec::new(0, 2, vec![LayerSpec::new(1, 1, 1)]).is_err());
        assert!(NetworkSpec::new(4, 2, vec![]).is_err());
        assert!(NetworkSpec::new(4, 2, vec![LayerSpec::new(0, 1, 1)]).is_err());
        let spec = NetworkSpec::new(4, 2, vec![LayerSpec::new(3, 1, 2)]).unwrap();
        assert!(matches!(spec.require_collapsing(), Err(Error::NotCollapsing(4))));
        assert_eq!(spec.validate().overlapping_layers, vec![1]);
    }

    #[test]
    fn shape_errors() {
        let spec = LayerSpec::new(2, 2, 1);
        let params = LayerParams::from_channel_filters(spec, 1, 1, vec![all_ones_filter(1, 2)]).unwrap();
        let wrong_channels = DenseTensor::<Rational>::zeros(vec![2, 2, 2]);
        assert!(forward_layer(&wrong_channels, &params).is_err());
        let wrong_size = DenseTensor::<Rational>::zeros(vec![1, 4, 4]);
        assert!(forward_layer(&wrong_size, &params).is_err());
        assert!(LayerParams::from_channel_filters(spec, 1, 1, vec![all_ones_filter(2, 2)]).is_err());
    }
}
