//! Architecture arithmetic: total stride, total receptive field, the
//! α-minimal total receptive field, and the rank lower bounds derived from
//! them.
//!
//! Layer numbers in this module are 1-based counts: `total_stride(spec, 0)`
//! is the stride before any layer, `total_receptive(spec, 1)` is the window
//! of the first layer.

use num_bigint::BigUint;
use num_traits::{One, Pow, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::network::{LayerSpec, NetworkSpec};
use crate::scalar::Rational;

/// Largest value table the α-minimal search will allocate per layer.
const MAX_DP_SPAN: u64 = 1 << 26;

pub(crate) fn serialize_biguint<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn serialize_rational<S: Serializer>(v: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&crate::scalar::format_rational(v))
}

fn check_layer(spec: &NetworkSpec, l: usize, allow_zero: bool) -> Result<()> {
    let lo = usize::from(!allow_zero);
    if l < lo || l > spec.depth() {
        return Err(Error::Precondition(format!(
            "layer {l} out of range {lo}..={}",
            spec.depth()
        )));
    }
    Ok(())
}

fn stride_product(layers: &[LayerSpec]) -> Result<u64> {
    layers.iter().try_fold(1u64, |acc, l| {
        acc.checked_mul(l.stride as u64)
            .ok_or_else(|| Error::Overflow("total stride exceeds u64".into()))
    })
}

/// `T_S^(l) = prod_{i <= l} S^(i)`, with `T_S^(0) = 1`.
pub fn total_stride(spec: &NetworkSpec, l: usize) -> Result<u64> {
    check_layer(spec, l, true)?;
    stride_product(&spec.layers()[..l])
}

/// Total receptive field of layer `l` when layer `k` uses window `windows[k]`.
fn receptive_with(layers: &[LayerSpec], windows: &[u64]) -> Result<u64> {
    let l = windows.len();
    let mut ts = 1i128;
    let mut acc = 0i128;
    for (k, (layer, &t)) in layers[..l].iter().zip(windows).enumerate() {
        if k + 1 == l {
            acc += t as i128 * ts;
        } else {
            acc += (t as i128 - layer.stride as i128) * ts;
        }
        ts *= layer.stride as i128;
        if ts > u64::MAX as i128 {
            return Err(Error::Overflow("total stride exceeds u64".into()));
        }
    }
    u64::try_from(acc).map_err(|_| Error::Overflow("total receptive field out of range".into()))
}

/// `T_R^(l) = R^(l) T_S^(l-1) + sum_{k<l} (R^(k) - S^(k)) T_S^(k-1)`.
pub fn total_receptive(spec: &NetworkSpec, l: usize) -> Result<u64> {
    check_layer(spec, l, false)?;
    let windows: Vec<u64> = spec.layers()[..l].iter().map(|x| x.receptive as u64).collect();
    receptive_with(spec.layers(), &windows)
}

/// Smallest achievable total receptive field above `alpha`, with the window
/// sizes that achieve it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlphaMinimal {
    pub value: u64,
    /// Effective window `t_k` of each layer `1..=l`.
    pub windows: Vec<usize>,
}

/// `min T_R^(l)(t_1, S^(1), ..., t_l, S^(l))` over `S^(k) <= t_k <= R^(k)`
/// subject to the value exceeding `alpha`.
///
/// A layer with `R < S` cannot be widened, so its only choice is `t = R`.
/// The objective is `sum_k c_k t_k + const` with `c_k = T_S^(k-1) > 0`; the
/// search is a reachability table over the values between the smallest and
/// largest achievable totals.
pub fn alpha_min_receptive(spec: &NetworkSpec, l: usize, alpha: u64) -> Result<AlphaMinimal> {
    check_layer(spec, l, false)?;
    let layers = &spec.layers()[..l];
    let lows: Vec<u64> = layers.iter().map(|x| x.stride.min(x.receptive) as u64).collect();
    let highs: Vec<u64> = layers.iter().map(|x| x.receptive as u64).collect();
    let mut coeff = Vec::with_capacity(l);
    let mut ts = 1u64;
    for layer in layers {
        coeff.push(ts);
        ts = ts
            .checked_mul(layer.stride as u64)
            .ok_or_else(|| Error::Overflow("total stride exceeds u64".into()))?;
    }

    let base = receptive_with(spec.layers(), &lows)?;
    let max = receptive_with(spec.layers(), &highs)?;
    if max <= alpha {
        return Err(Error::Infeasible { layer: l, alpha, max: max as i64 });
    }
    let span = max - base;
    if span > MAX_DP_SPAN {
        return Err(Error::Overflow(format!("receptive-field range {span} too large to search")));
    }
    let span = span as usize;

    // choice[k][s] = 1 + (t_k - low_k) for the first way to reach offset s
    // using layers 0..=k; 0 means unreachable.
    let mut choice: Vec<Vec<u32>> = Vec::with_capacity(l);
    let mut reach = vec![false; span + 1];
    reach[0] = true;
    for k in 0..l {
        let mut next = vec![false; span + 1];
        let mut pick = vec![0u32; span + 1];
        let steps = highs[k] - lows[k];
        for s in (0..=span).filter(|&s| reach[s]) {
            for step in 0..=steps {
                let target = s + (step * coeff[k]) as usize;
                if target > span {
                    break;
                }
                if !next[target] {
                    next[target] = true;
                    pick[target] = step as u32 + 1;
                }
            }
        }
        choice.push(pick);
        reach = next;
    }

    let first = (alpha + 1).saturating_sub(base) as usize;
    let offset = (first..=span)
        .find(|&s| reach[s])
        .expect("the all-maximal windows reach `span`, which exceeds alpha");

    let mut windows = vec![0usize; l];
    let mut s = offset;
    for k in (0..l).rev() {
        let step = (choice[k][s] - 1) as u64;
        windows[k] = (lows[k] + step) as usize;
        s -= (step * coeff[k]) as usize;
    }
    debug_assert_eq!(s, 0);
    Ok(AlphaMinimal { value: base + offset as u64, windows })
}

/// Re-evaluates the total receptive field for explicit windows `t_1..t_l`.
pub fn receptive_for_windows(spec: &NetworkSpec, windows: &[usize]) -> Result<u64> {
    check_layer(spec, windows.len(), false)?;
    let w: Vec<u64> = windows.iter().map(|&t| t as u64).collect();
    receptive_with(spec.layers(), &w)
}

/// Lower bound contributed by one layer `K` with `T_R^(K) > H/2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerBound {
    /// 1-based layer number.
    pub layer: usize,
    pub total_stride: u64,
    pub total_receptive: u64,
    /// α-minimal total receptive field for `α = floor(H/2)`.
    pub alpha_minimal: u64,
    pub windows: Vec<usize>,
    pub base: u64,
    pub exponent: u64,
    #[serde(serialize_with = "serialize_biguint")]
    pub bound: BigUint,
}

impl LayerBound {
    pub fn log10(&self) -> Option<f64> {
        log10_power(self.base, self.exponent)
    }
}

/// `log10(base^exponent)`; `None` when the value is zero.
pub fn log10_power(base: u64, exponent: u64) -> Option<f64> {
    match (base, exponent) {
        (_, 0) => Some(0.0),
        (0, _) => None,
        (b, e) => Some(e as f64 * (b as f64).log10()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub width: usize,
    pub rep_channels: usize,
    /// `T_S^(0), ..., T_S^(L)`.
    pub total_strides: Vec<u64>,
    /// `T_R^(1), ..., T_R^(L)`.
    pub total_receptive: Vec<u64>,
    /// 1-based layers with `T_R^(K) > H/2`.
    pub valid_layers: Vec<usize>,
    pub candidates: Vec<LayerBound>,
    pub best: LayerBound,
    pub log10: Option<f64>,
    /// The bound is at most the base, as for non-overlapping networks.
    pub trivial: bool,
}

/// Per-layer strides and receptive fields, without bound computation.
pub fn layer_table(spec: &NetworkSpec) -> Result<(Vec<u64>, Vec<u64>)> {
    let strides = (0..=spec.depth()).map(|l| total_stride(spec, l)).collect::<Result<Vec<_>>>()?;
    let fields = (1..=spec.depth()).map(|l| total_receptive(spec, l)).collect::<Result<Vec<_>>>()?;
    Ok((strides, fields))
}

/// Evaluates the rank lower bound for every layer `K` whose total receptive
/// field exceeds `H/2` and reports them all, plus the largest.
///
/// For each such `K`, with `T_S = T_S^(K)` and `T = T_R^(K, floor(H/2))`:
/// exponent `floor((H - T)/T_S + 1) * ceil(H / T_S)` (clamped at zero) and
/// base `min(M, D^(K), floor(min_{l<=K} D^(l) / 2))`.
pub fn theorem1_bound(spec: &NetworkSpec) -> Result<BoundReport> {
    spec.require_collapsing()?;
    let h = spec.width() as u64;
    if !h.is_multiple_of(2) {
        return Err(Error::Precondition(format!("H must be even, got {h}")));
    }
    let (total_strides, total_receptive) = layer_table(spec)?;
    let m = spec.rep_channels() as u64;

    let mut candidates = Vec::new();
    let mut min_channels = u64::MAX;
    for k in 1..=spec.depth() {
        min_channels = min_channels.min(spec.layers()[k - 1].channels as u64);
        if 2 * total_receptive[k - 1] <= h {
            continue;
        }
        let ts = total_strides[k];
        let am = alpha_min_receptive(spec, k, h / 2)?;
        let first = (h as i128 - am.value as i128 + ts as i128).div_euclid(ts as i128).max(0) as u64;
        let exponent = first * h.div_ceil(ts);
        let base = m.min(spec.layers()[k - 1].channels as u64).min(min_channels / 2);
        let bound = BigUint::from(base).pow(exponent);
        candidates.push(LayerBound {
            layer: k,
            total_stride: ts,
            total_receptive: total_receptive[k - 1],
            alpha_minimal: am.value,
            windows: am.windows,
            base,
            exponent,
            bound,
        });
    }
    let best = candidates
        .iter()
        .reduce(|best, c| if c.bound > best.bound { c } else { best })
        .cloned()
        .ok_or_else(|| Error::Precondition("no layer has a total receptive field above H/2".into()))?;
    Ok(BoundReport {
        width: spec.width(),
        rep_channels: spec.rep_channels(),
        valid_layers: candidates.iter().map(|c| c.layer).collect(),
        log10: best.log10(),
        trivial: best.bound <= BigUint::from(best.base),
        total_strides,
        total_receptive,
        candidates,
        best,
    })
}

/// Largest `k` with `den * 2^k <= num` (`num >= den > 0`).
fn floor_log2_ratio(num: u64, den: u64) -> u32 {
    let mut k = 0;
    while (den as u128) << (k + 1) <= num as u128 {
        k += 1;
    }
    k
}

/// Alternating `B x B` stride-1 and `2 x 2` stride-2 layers on `H = 2^L`,
/// every layer with `channels` outputs.
pub fn convpool_spec(block: usize, width: usize, rep_channels: usize, channels: usize) -> Result<NetworkSpec> {
    let depth = power_of_two_exponent(width)?;
    let mut layers = Vec::with_capacity(2 * depth as usize);
    for _ in 0..depth {
        layers.push(LayerSpec::new(block, 1, channels));
        layers.push(LayerSpec::new(2, 2, channels));
    }
    NetworkSpec::new(width, rep_channels, layers)
}

fn power_of_two_exponent(width: usize) -> Result<u32> {
    if width < 2 || !width.is_power_of_two() {
        return Err(Error::Precondition(format!("H must be a power of two >= 2, got {width}")));
    }
    Ok(width.trailing_zeros())
}

/// Closed forms for the alternating conv-pool family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvPoolBound {
    pub block: usize,
    pub width: usize,
    pub depth: u32,
    pub rep_channels: usize,
    /// 1-based index `l` of the first `B x B` layer (GC layer `2l - 1`)
    /// whose total receptive field exceeds `H/2`.
    pub first_block: u32,
    /// `2^(2L - 2l + 1)`.
    pub exact_exponent: u64,
    #[serde(serialize_with = "serialize_biguint")]
    pub exact_bound: BigUint,
    /// `(2B-1)^2 / 2 * (1 + (2B-2)/H)^-2`, a rational.
    #[serde(serialize_with = "serialize_rational")]
    pub closed_form_exponent: Rational,
    /// `(2B-1)^2 / 2`, the limit as `H` grows.
    #[serde(serialize_with = "serialize_rational")]
    pub limit_exponent: Rational,
    /// `(2B-1)^2 / 4`, guaranteed when `B <= H/5 + 1`.
    #[serde(serialize_with = "serialize_rational")]
    pub quarter_exponent: Rational,
    pub quarter_applies: bool,
    pub exact_at_least_closed_form: bool,
    pub exact_at_least_quarter: bool,
}

impl ConvPoolBound {
    pub fn exact_log10(&self) -> f64 {
        self.exact_exponent as f64 * (self.rep_channels as f64).log10()
    }

    pub fn closed_form_log10(&self) -> f64 {
        crate::scalar::Scalar::to_f64(&self.closed_form_exponent) * (self.rep_channels as f64).log10()
    }
}

/// Exact and closed-form lower bounds for the conv-pool family with block
/// size `B >= 2` on `H = 2^L`, assuming every layer has at least `2M`
/// channels.
pub fn prop2_bound(block: usize, width: usize, rep_channels: usize) -> Result<ConvPoolBound> {
    let depth = power_of_two_exponent(width)?;
    if block < 2 {
        return Err(Error::Precondition(
            "B >= 2 needed: with 1x1 blocks the network is non-overlapping".into(),
        ));
    }
    let b = block as u64;
    let h = width as u64;
    let num = h + 2 * b - 2;
    let den = 2 * b - 1;
    let first_block = 1 + floor_log2_ratio(num, den);
    let exact_exponent = 1u64 << (2 * depth - 2 * first_block + 1);
    let exact_bound = BigUint::from(rep_channels).pow(exact_exponent);

    let sq = Rational::from_integer((den * den) as i64);
    let limit_exponent = sq.clone() / Rational::from_integer(2);
    let scale = Rational::new(h as i64, num as i64);
    let closed_form_exponent = limit_exponent.clone() * scale.clone() * scale;
    let quarter_exponent = sq / Rational::from_integer(4);
    let exact = Rational::from_integer(exact_exponent as i64);
    Ok(ConvPoolBound {
        block,
        width,
        depth,
        rep_channels,
        first_block,
        exact_exponent,
        exact_bound,
        exact_at_least_closed_form: exact >= closed_form_exponent,
        quarter_applies: 5 * b <= h + 5,
        exact_at_least_quarter: exact >= quarter_exponent,
        closed_form_exponent,
        limit_exponent,
        quarter_exponent,
    })
}

/// Block size equivalent to `K` stacked `C x C` stride-1 convolutions.
pub fn vgg_effective_block(convs: usize, kernel: usize) -> usize {
    convs * (kernel - 1) + 1
}

pub fn big_pow(base: u64, exponent: u64) -> BigUint {
    if exponent == 0 {
        return BigUint::one();
    }
    if base == 0 {
        return BigUint::zero();
    }
    BigUint::from(base).pow(exponent)
}
