//! Single wide layer followed by a sum-then-product tail.
//!
//! Each window of the first layer pairs two grid positions, its top-left
//! corner and the far corner along the partition direction. With
//! `beta = 2 alpha / D` the per-window channel sum is `alpha^2` when both
//! positions hold the same template below `D` and zero for two different
//! ones, so every complete window contributes a rank-`D` factor.

use num_bigint::BigUint;

use super::tail::tail_layers;
use crate::analysis::big_pow;
use crate::error::{Error, Result};
use crate::grid::PartitionKind;
use crate::matrix::Matrix;
use crate::network::{Filter, LayerParams, LayerSpec, NetworkParams, NetworkSpec};
use crate::scalar::{Rational, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionConfig {
    pub width: usize,
    pub rep_channels: usize,
    pub receptive: usize,
    pub stride: usize,
    pub channels: usize,
    pub partition: PartitionKind,
    pub alpha: Rational,
    pub representation: Matrix<Rational>,
}

impl ConstructionConfig {
    /// `alpha = 1` and `F = I`.
    pub fn new(
        width: usize,
        rep_channels: usize,
        receptive: usize,
        stride: usize,
        channels: usize,
        partition: PartitionKind,
    ) -> Result<Self> {
        let cfg = Self {
            width,
            rep_channels,
            receptive,
            stride,
            channels,
            partition,
            alpha: Rational::from_int(1),
            representation: Matrix::identity(rep_channels),
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn with_alpha(mut self, alpha: Rational) -> Result<Self> {
        self.alpha = alpha;
        self.check()?;
        Ok(self)
    }

    pub fn with_representation(mut self, f: Matrix<Rational>) -> Result<Self> {
        self.representation = f;
        self.check()?;
        Ok(self)
    }

    pub fn beta(&self) -> Rational {
        Rational::from_int(2) * self.alpha.clone() / Rational::from_int(self.channels as i64)
    }

    /// Offset of the second anchor inside a window.
    pub fn far_anchor(&self) -> (usize, usize) {
        match self.partition {
            PartitionKind::LeftRight => (0, self.receptive - 1),
            PartitionKind::TopBottom => (self.receptive - 1, 0),
        }
    }

    /// Size of the first layer's output.
    pub fn out_size(&self) -> usize {
        self.width.div_ceil(self.stride)
    }

    /// `D^(floor((H - R)/S + 1) * ceil(H/S))`.
    pub fn expected_rank(&self) -> BigUint {
        big_pow(self.channels as u64, claim3_exponent(self.width, self.receptive, self.stride))
    }

    fn check(&self) -> Result<()> {
        let m = self.rep_channels;
        if self.width == 0 || m == 0 || self.stride == 0 || self.channels == 0 {
            return Err(Error::Precondition("H, M, S and D must be positive".into()));
        }
        if 2 * self.receptive <= self.width {
            return Err(Error::Precondition(format!(
                "R = {} must exceed H/2 = {}/2",
                self.receptive, self.width
            )));
        }
        if self.channels > m {
            return Err(Error::Precondition(format!("D = {} exceeds M = {m}", self.channels)));
        }
        if self.alpha == Rational::from_int(0) {
            return Err(Error::Precondition("alpha must be nonzero".into()));
        }
        let f = &self.representation;
        if f.rows() != m || f.cols() != m {
            return Err(Error::ShapeMismatch(format!(
                "representation matrix must be {m}x{m}, got {}x{}",
                f.rows(),
                f.cols()
            )));
        }
        Ok(())
    }
}

/// `floor((H - R)/S + 1) * ceil(H/S)`, zero when the window is wider than
/// the grid plus one stride.
pub fn claim3_exponent(width: usize, receptive: usize, stride: usize) -> u64 {
    let (h, r, s) = (width as i64, receptive as i64, stride as i64);
    let complete = (h - r + s).div_euclid(s).max(0) as u64;
    complete * width.div_ceil(stride) as u64
}

/// The wide layer `(R, S, D)` followed by one global `(H', H', 1)` layer.
pub fn claim3_spec(cfg: &ConstructionConfig) -> Result<NetworkSpec> {
    let out = cfg.out_size();
    NetworkSpec::new(
        cfg.width,
        cfg.rep_channels,
        vec![
            LayerSpec::new(cfg.receptive, cfg.stride, cfg.channels),
            LayerSpec::new(out, out, 1),
        ],
    )
}

/// The wide layer alone, with `channels >= D` outputs; channels from `D` on
/// are identically zero.
pub fn claim3_psi_layer(cfg: &ConstructionConfig, layer: LayerSpec) -> Result<LayerParams<Rational>> {
    if layer.receptive != cfg.receptive || layer.stride != cfg.stride || layer.channels < cfg.channels {
        return Err(Error::Precondition(format!(
            "layer (R={}, S={}, D={}) does not fit R={}, S={}, D>={}",
            layer.receptive, layer.stride, layer.channels, cfg.receptive, cfg.stride, cfg.channels
        )));
    }
    let m = cfg.rep_channels;
    let r = cfg.receptive;
    let f_inv = cfg.representation.inverse()?;
    let beta = cfg.beta();
    let anchors = [(0, 0), cfg.far_anchor()];
    let filters = (0..layer.channels)
        .map(|c| {
            if c >= cfg.channels {
                return Filter::constant(m, r, Rational::from_int(0));
            }
            let mut f = Filter::constant(m, r, Rational::from_int(1));
            for &(j, i) in &anchors {
                f.set_bias(j, i, beta.clone());
                for d in 0..m {
                    f.set_weight(d, j, i, -cfg.alpha.clone() * f_inv.get(d, c).clone());
                }
            }
            f
        })
        .collect();
    LayerParams::from_channel_filters(layer, m, cfg.out_size(), filters)
}

/// Parameters for `spec`, whose first layer is `(R, S, D^(1) >= D)` and whose
/// remaining layers can carry the sum-then-product tail.
pub fn claim3_params(cfg: &ConstructionConfig, spec: &NetworkSpec) -> Result<NetworkParams<Rational>> {
    if spec.width() != cfg.width || spec.rep_channels() != cfg.rep_channels {
        return Err(Error::Precondition("spec and config disagree on H or M".into()));
    }
    spec.require_collapsing()?;
    let mut layers = vec![claim3_psi_layer(cfg, spec.layers()[0])?];
    let d = cfg.channels;
    layers.extend(tail_layers(spec, 1, |_, _| (0..d).collect())?);
    Ok(NetworkParams::new(layers))
}

/// The `M x M` matrix of the per-window channel sum as a function of the
/// templates at the two anchors, computed from the filter definition.
pub fn pair_matrix(cfg: &ConstructionConfig) -> Result<Matrix<Rational>> {
    let m = cfg.rep_channels;
    let f = &cfg.representation;
    let f_inv = f.inverse()?;
    let beta = cfg.beta();
    // factor[a][c] = beta - alpha * sum_k F[a, k] F^-1[k, c]
    let factor = Matrix::from_fn(m, cfg.channels, |a, c| {
        let mut acc = beta.clone();
        for k in 0..m {
            acc = acc - cfg.alpha.clone() * f.get(a, k).clone() * f_inv.get(k, c).clone();
        }
        acc
    });
    Ok(Matrix::from_fn(m, m, |a, b| {
        let mut acc = Rational::from_int(0);
        for c in 0..cfg.channels {
            acc.add_product(factor.get(a, c), factor.get(b, c));
        }
        acc
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_formula() {
        assert_eq!(claim3_exponent(2, 2, 1), 2);
        assert_eq!(claim3_exponent(4, 3, 1), 8);
        assert_eq!(claim3_exponent(4, 3, 2), 2);
        assert_eq!(claim3_exponent(4, 4, 4), 1);
        assert_eq!(claim3_exponent(4, 9, 1), 0);
    }

    #[test]
    fn config_checks() {
        assert!(ConstructionConfig::new(4, 2, 2, 1, 2, PartitionKind::LeftRight).is_err());
        assert!(ConstructionConfig::new(4, 2, 3, 1, 3, PartitionKind::LeftRight).is_err());
        let cfg = ConstructionConfig::new(4, 3, 3, 1, 2, PartitionKind::TopBottom).unwrap();
        assert_eq!(cfg.beta(), Rational::from_int(1));
        assert_eq!(cfg.far_anchor(), (2, 0));
        assert!(cfg.clone().with_alpha(Rational::from_int(0)).is_err());
        assert!(cfg.with_representation(Matrix::identity(2)).is_err());
    }

    #[test]
    fn pair_matrix_has_rank_d() {
        for (m, d) in [(2, 1), (2, 2), (3, 2), (4, 3)] {
            let cfg = ConstructionConfig::new(2, m, 2, 1, d, PartitionKind::LeftRight).unwrap();
            let a = pair_matrix(&cfg).unwrap();
            assert_eq!(a.rank().unwrap(), d);
            for i in 0..d {
                for j in 0..d {
                    let expected = if i == j { cfg.alpha.clone() * cfg.alpha.clone() } else { Rational::from_int(0) };
                    assert_eq!(*a.get(i, j), expected);
                }
            }
        }
    }

    #[test]
    fn psi_layer_sparsity() {
        let cfg = ConstructionConfig::new(4, 2, 3, 1, 2, PartitionKind::LeftRight).unwrap();
        let layer = claim3_psi_layer(&cfg, LayerSpec::new(3, 1, 3)).unwrap();
        let f = &layer.filters()[0];
        assert_eq!(*f.weight(0, 0, 0), Rational::from_int(-1));
        assert_eq!(*f.weight(0, 0, 2), Rational::from_int(-1));
        assert_eq!(*f.weight(0, 1, 1), Rational::from_int(0));
        assert_eq!(*f.bias(1, 1), Rational::from_int(1));
        assert!(layer.filters()[2].biases().iter().all(|b| *b == Rational::from_int(0)));
        assert!(claim3_psi_layer(&cfg, LayerSpec::new(2, 1, 2)).is_err());
    }
}
