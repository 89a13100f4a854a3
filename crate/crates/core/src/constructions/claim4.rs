//! Simulating one wide two-anchor layer with a stack of narrower layers.
//!
//! The wide layer `Psi` multiplies, per channel `k`, an affine function of
//! its window's top-left input with an affine function of the input `R - 1`
//! steps along one axis. The stack keeps the two affine values in channels
//! `k` and `D + k`, carries the first one straight down and shifts the
//! second by `t_l - 1` positions at every layer, where the `t_l` realize
//! `R` as a total receptive field. The layer that multiplies the halves is
//! the last one that still shifts. The second anchor's bias is applied
//! there too, so inputs that fall off the grid read the bias exactly as a
//! zero-padded `Psi` does.

use num_bigint::BigUint;

use super::claim3::{claim3_exponent, claim3_psi_layer, ConstructionConfig};
use super::tail::tail_layers;
use crate::analysis::{alpha_min_receptive, total_stride};
use crate::error::{Error, Result};
use crate::grid::PartitionKind;
use crate::network::{Filter, LayerParams, LayerSpec, NetworkParams, NetworkSpec};
use crate::scalar::{Rational, Scalar};

/// Axis along which the second anchor of `psi` sits.
///
/// Every filter position other than `(0, 0)` and the far corner must have
/// zero weights and unit bias. A filter that only uses `(0, 0)` is read as
/// left-right.
pub fn anchor_orientation<T: Scalar>(psi: &LayerParams<T>) -> Result<PartitionKind> {
    let r = psi.spec().receptive;
    let trivial = |f: &Filter<T>, j: usize, i: usize| {
        f.bias(j, i).is_one() && (0..f.in_channels()).all(|d| f.weight(d, j, i).is_zero())
    };
    let fits = |far: (usize, usize)| {
        psi.filters().iter().all(|f| {
            (0..r).all(|j| (0..r).all(|i| (j, i) == (0, 0) || (j, i) == far || trivial(f, j, i)))
        })
    };
    if fits((0, r - 1)) {
        Ok(PartitionKind::LeftRight)
    } else if fits((r - 1, 0)) {
        Ok(PartitionKind::TopBottom)
    } else {
        Err(Error::Precondition(
            "the wide layer must only use its top-left corner and one far corner".into(),
        ))
    }
}

fn at(kind: PartitionKind, along: usize) -> (usize, usize) {
    match kind {
        PartitionKind::LeftRight => (0, along),
        PartitionKind::TopBottom => (along, 0),
    }
}

/// Builds parameters for `phi_layers` (applied to the `H x H` grid with `M`
/// channels) that reproduce the shared layer `psi` on its first `D` channels,
/// `D` being `psi`'s channel count, and output zero on the others.
///
/// Requirements: the total stride of the stack equals `psi`'s stride, some
/// windows `S <= t_l <= R^(l)` give total receptive field `R_psi`, layers
/// before the multiplying one have at least `2D` channels and the rest at
/// least `D`.
pub fn claim4_compile(
    width: usize,
    rep_channels: usize,
    psi: &LayerParams<Rational>,
    phi_layers: &[LayerSpec],
) -> Result<NetworkParams<Rational>> {
    let psi_spec = *psi.spec();
    if !psi_spec.shared {
        return Err(Error::Precondition("the wide layer must be shared".into()));
    }
    if psi.in_channels() != rep_channels {
        return Err(Error::ShapeMismatch(format!(
            "wide layer reads {} channels, representation has {rep_channels}",
            psi.in_channels()
        )));
    }
    let phi = NetworkSpec::new(width, rep_channels, phi_layers.to_vec())?;
    let depth = phi.depth();
    let kind = anchor_orientation(psi)?;
    let d = psi_spec.channels;
    let r_psi = psi_spec.receptive;

    let ts = total_stride(&phi, depth)?;
    if ts != psi_spec.stride as u64 {
        return Err(Error::Precondition(format!(
            "stack has total stride {ts}, wide layer has stride {}",
            psi_spec.stride
        )));
    }
    let reach = alpha_min_receptive(&phi, depth, r_psi as u64 - 1)?;
    if reach.value != r_psi as u64 {
        return Err(Error::Precondition(format!(
            "no window sizes give total receptive field {r_psi} (closest above is {})",
            reach.value
        )));
    }
    let windows = reach.windows;
    if depth == 1 && phi_layers[0] == psi_spec {
        return Ok(NetworkParams::new(vec![psi.clone()]));
    }
    let mult = windows
        .iter()
        .rposition(|&t| t >= 2)
        .ok_or_else(|| Error::Precondition("the wide layer's anchors coincide".into()))?;
    for (idx, layer) in phi_layers.iter().enumerate() {
        let need = if idx < mult { 2 * d } else { d };
        if layer.channels < need {
            return Err(Error::Precondition(format!(
                "layer {} has {} channels, needs at least {need}",
                idx + 1,
                layer.channels
            )));
        }
    }

    let far = at(kind, r_psi - 1);
    let sizes = phi.spatial_sizes();
    let one = Rational::from_int(1);
    let zero = Rational::from_int(0);
    let mut layers = Vec::with_capacity(depth);
    for (idx, layer) in phi_layers.iter().enumerate() {
        let in_channels = phi.input_channels(idx);
        let r = layer.receptive;
        let shift = at(kind, windows[idx] - 1);
        let filters = (0..layer.channels)
            .map(|c| {
                let mut f = Filter::constant(in_channels, r, one.clone());
                let src = psi.filters()[c % d.max(1)].clone();
                let active = if idx < mult { c < 2 * d } else { c < d };
                if !active {
                    return Filter::constant(in_channels, r, zero.clone());
                }
                if idx == 0 {
                    // Transform: the first half reads the top-left anchor, the
                    // second half the far anchor's weights at the shifted spot.
                    if idx == mult {
                        f.set_bias(0, 0, src.bias(0, 0).clone());
                        f.set_bias(shift.0, shift.1, src.bias(far.0, far.1).clone());
                        for m in 0..in_channels {
                            f.set_weight(m, 0, 0, src.weight(m, 0, 0).clone());
                            f.set_weight(m, shift.0, shift.1, src.weight(m, far.0, far.1).clone());
                        }
                    } else if c < d {
                        f.set_bias(0, 0, src.bias(0, 0).clone());
                        for m in 0..in_channels {
                            f.set_weight(m, 0, 0, src.weight(m, 0, 0).clone());
                        }
                    } else {
                        f.set_bias(shift.0, shift.1, zero.clone());
                        for m in 0..in_channels {
                            f.set_weight(m, shift.0, shift.1, src.weight(m, far.0, far.1).clone());
                        }
                    }
                } else if idx == mult {
                    let k = c;
                    f.set_bias(0, 0, zero.clone());
                    f.set_weight(k, 0, 0, one.clone());
                    f.set_bias(shift.0, shift.1, src.bias(far.0, far.1).clone());
                    f.set_weight(d + k, shift.0, shift.1, one.clone());
                } else {
                    let (pos, src_channel) = if idx < mult && c >= d { (shift, c) } else { ((0, 0), c) };
                    f.set_bias(pos.0, pos.1, zero.clone());
                    f.set_weight(src_channel, pos.0, pos.1, one.clone());
                }
                f
            })
            .collect();
        layers.push(LayerParams::from_channel_filters(*layer, in_channels, sizes[idx + 1], filters)?);
    }
    Ok(NetworkParams::new(layers))
}

/// A witness for the layer-K lower bound: the wide-layer simulation at layer `K` followed by
/// the sum-then-product tail.
#[derive(Debug, Clone)]
pub struct Theorem1Construction {
    /// 1-based layer whose receptive field realizes the wide layer.
    pub layer: usize,
    pub config: ConstructionConfig,
    pub params: NetworkParams<Rational>,
    pub exponent: u64,
    pub expected_rank: BigUint,
}

/// Builds parameters for `spec` whose grid tensor, matricized by `kind`,
/// reaches `D^e` with `e` the exponent at layer `K`.
///
/// `layer` picks `K` (1-based); by default the valid `K < L` with the largest
/// bound is used. `D` is the largest value the simulation supports:
/// `min(M, D^(K))`, further capped by half the channels of the layers before
/// the multiplying one.
pub fn theorem1_params(spec: &NetworkSpec, kind: PartitionKind, layer: Option<usize>) -> Result<Theorem1Construction> {
    spec.require_collapsing()?;
    let h = spec.width();
    let m = spec.rep_channels();
    let candidates: Vec<usize> = match layer {
        Some(k) if k == 0 || k >= spec.depth() => {
            return Err(Error::Precondition(format!(
                "layer {k} must be followed by at least one layer (depth {})",
                spec.depth()
            )))
        }
        Some(k) => vec![k],
        None => (1..spec.depth()).collect(),
    };

    let mut best: Option<(BigUint, usize, ConstructionConfig)> = None;
    let mut last_err = None;
    for k in candidates {
        match plan(spec, k, kind) {
            Ok(cfg) => {
                let value = cfg.expected_rank();
                if best.as_ref().is_none_or(|(b, ..)| value > *b) {
                    best = Some((value, k, cfg));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let (expected_rank, k, cfg) = best.ok_or_else(|| {
        last_err.unwrap_or_else(|| Error::Precondition("no layer can realize a wide window".into()))
    })?;

    let wide = LayerSpec::new(cfg.receptive, cfg.stride, cfg.channels);
    let psi = claim3_psi_layer(&cfg, wide)?;
    let mut layers = claim4_compile(h, m, &psi, &spec.layers()[..k])?.into_layers();
    let d = cfg.channels;
    layers.extend(tail_layers(spec, k, |_, _| (0..d).collect())?);
    Ok(Theorem1Construction {
        layer: k,
        exponent: claim3_exponent(h, cfg.receptive, cfg.stride),
        config: cfg,
        params: NetworkParams::new(layers),
        expected_rank,
    })
}

fn plan(spec: &NetworkSpec, k: usize, kind: PartitionKind) -> Result<ConstructionConfig> {
    let h = spec.width();
    let am = alpha_min_receptive(spec, k, (h / 2) as u64)?;
    let stride = total_stride(spec, k)? as usize;
    let layers = &spec.layers()[..k];
    let mult = am.windows.iter().rposition(|&t| t >= 2).unwrap_or(0);
    let mut d = spec.rep_channels().min(layers[k - 1].channels);
    for l in &layers[..mult] {
        d = d.min(l.channels / 2);
    }
    for l in &layers[mult..] {
        d = d.min(l.channels);
    }
    if d == 0 {
        return Err(Error::Precondition(format!("layer {k} leaves no room for a channel pair")));
    }
    ConstructionConfig::new(h, spec.rep_channels(), am.value as usize, stride, d, kind)
}
