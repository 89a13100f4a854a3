//! Self-checking suites: each builds fixtures, runs the oracle and reports
//! one line per case.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{
    alpha_min_receptive, big_pow, convpool_spec, prop2_bound, theorem1_bound, total_receptive, total_stride,
    vgg_effective_block,
};
use crate::constructions::{
    claim3_params, claim3_psi_layer, claim3_spec, claim4_compile, default_value_grid, fine_value_grid, pair_matrix, random_input,
    random_params, theorem1_params, theorem3_params, theorem3_spec, ConstructionConfig,
};
use crate::error::{Error, Result};
use crate::grid::{even_partitions, exact_rank, float_rank, PartitionKind, DEFAULT_GRID_CAP};
use crate::lift::lift_params;
use crate::matrix::Matrix;
use crate::network::{forward_network, Filter, LayerParams, LayerSpec, NetworkParams, NetworkSpec};
use crate::scalar::{Rational, Scalar, DEFAULT_TOL};
use crate::tensor::IndexPartition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Prop1,
    Lemma1,
    Thm1,
    Claim4,
    Thm3,
    Prop2,
}

impl Suite {
    pub const ALL: [Suite; 6] = [Suite::Prop1, Suite::Lemma1, Suite::Thm1, Suite::Claim4, Suite::Thm3, Suite::Prop2];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Prop1 => "prop1",
            Suite::Lemma1 => "lemma1",
            Suite::Thm1 => "thm1",
            Suite::Claim4 => "claim4",
            Suite::Thm3 => "thm3",
            Suite::Prop2 => "prop2",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Precondition(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub passed_cases: usize,
    pub total_cases: usize,
    pub elapsed_ms: u128,
    pub cases: Vec<CaseResult>,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random specs (lemma1) or random parameter seeds (thm1 genericity).
    pub trials: usize,
    /// Random inputs per equivalence fixture.
    pub inputs: usize,
    pub cap: u64,
    pub tol: f64,
    /// Also compute every rank in float mode and require agreement.
    pub cross_check: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 0, trials: 100, inputs: 50, cap: DEFAULT_GRID_CAP, tol: DEFAULT_TOL, cross_check: true }
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> SuiteReport {
    let start = Instant::now();
    let cases = match suite {
        Suite::Prop1 => prop1(opts),
        Suite::Lemma1 => lemma1(opts),
        Suite::Thm1 => thm1(opts),
        Suite::Claim4 => claim4(opts),
        Suite::Thm3 => thm3(opts),
        Suite::Prop2 => prop2(),
    };
    let passed_cases = cases.iter().filter(|c| c.passed).count();
    SuiteReport {
        suite,
        passed: passed_cases == cases.len(),
        passed_cases,
        total_cases: cases.len(),
        elapsed_ms: start.elapsed().as_millis(),
        cases,
    }
}

/// Runs a case body; an error fails the case with the error as detail.
fn case(name: impl Into<String>, body: impl FnOnce() -> Result<(bool, String)>) -> CaseResult {
    let name = name.into();
    match body() {
        Ok((passed, detail)) => CaseResult { name, passed, detail },
        Err(e) => CaseResult { name, passed: false, detail: format!("error: {e}") },
    }
}

fn input_grid() -> Vec<Rational> {
    (-4..=4).map(|k| Rational::from_ratio(k, 3)).collect()
}

/// Exact rank, plus the float rank when cross-checking; the second value is
/// `None` when the modes agree or were not compared.
fn ranks(
    spec: &NetworkSpec,
    params: &NetworkParams<Rational>,
    part: &IndexPartition,
    opts: &VerifyOptions,
) -> Result<(usize, Option<usize>)> {
    let f = Matrix::identity(spec.rep_channels());
    let exact = exact_rank(spec, params, &f, part, opts.cap)?.rank;
    if !opts.cross_check {
        return Ok((exact, None));
    }
    let float = float_rank(spec, &params.to_f64(), &f.to_f64(), part, opts.cap, opts.tol)?.rank;
    Ok((exact, (float != exact).then_some(float)))
}

fn mode_note(mismatch: Option<usize>) -> String {
    match mismatch {
        Some(f) => format!("; float rank {f} disagrees"),
        None => String::new(),
    }
}

fn outputs_match(
    big: &NetworkSpec,
    big_params: &NetworkParams<Rational>,
    small: &NetworkSpec,
    small_params: &NetworkParams<Rational>,
    inputs: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(bool, String)> {
    let grid = input_grid();
    for k in 0..inputs {
        let x = random_input(rng, big.rep_channels(), big.width(), &grid);
        let a = forward_network(big, big_params, &x)?;
        let b = forward_network(small, small_params, &x)?;
        let n = b.len();
        if a.data()[..n] != *b.data() || a.data()[n..].iter().any(|v| !v.is_zero()) {
            return Ok((false, format!("outputs differ on input #{k}")));
        }
    }
    Ok((true, format!("{inputs} inputs agree exactly")))
}

fn spec(width: usize, m: usize, layers: &[LayerSpec]) -> NetworkSpec {
    NetworkSpec::new(width, m, layers.to_vec()).expect("fixture specs are valid")
}

fn prop1(opts: &VerifyOptions) -> Vec<CaseResult> {
    let s = LayerSpec::new;
    let u = LayerSpec::unshared;
    let fixtures = [
        ("wider windows", spec(4, 2, &[s(3, 1, 2), s(3, 2, 2), s(2, 2, 1)]), spec(4, 2, &[s(2, 1, 2), s(2, 2, 2), s(2, 2, 1)])),
        (
            "inserted identity layer",
            spec(4, 3, &[s(2, 1, 3), s(3, 1, 3), s(2, 2, 3), s(2, 2, 1)]),
            spec(4, 3, &[s(1, 1, 3), s(2, 2, 3), s(2, 2, 1)]),
        ),
        ("unshared windows", spec(4, 2, &[u(3, 2, 2), s(2, 2, 1)]), spec(4, 2, &[u(2, 2, 2), s(2, 2, 1)])),
        (
            "shared into unshared with identity",
            spec(4, 2, &[u(4, 1, 2), s(1, 1, 4), s(4, 4, 1)]),
            spec(4, 2, &[s(2, 1, 2), s(4, 4, 1)]),
        ),
    ];
    fixtures
        .into_iter()
        .enumerate()
        .map(|(k, (name, big, small))| {
            case(format!("lift: {name}"), || {
                let seed = opts.seed.wrapping_add(k as u64);
                let small_params = random_params(&small, seed, &default_value_grid())?;
                let big_params = lift_params(&big, &small, &small_params)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                outputs_match(&big, &big_params, &small, &small_params, opts.inputs, &mut rng)
            })
        })
        .collect()
}

/// A random non-overlapping collapsing spec (`R = S` everywhere) whose last
/// layer is the one that reaches `1 x 1`.
pub fn random_non_overlapping_spec(rng: &mut ChaCha8Rng, width: usize, rep_channels: usize) -> Result<NetworkSpec> {
    let strides: Vec<usize> = match width {
        2 => vec![2],
        4 if rng.gen_bool(0.5) => vec![4],
        4 => vec![2, 2],
        _ => return Err(Error::Precondition(format!("random specs support H in {{2, 4}}, got {width}"))),
    };
    let mut layers = Vec::new();
    for (k, &stride) in strides.iter().enumerate() {
        if layers.len() < 2 && rng.gen_bool(0.3) {
            layers.push(LayerSpec { receptive: 1, stride: 1, channels: rng.gen_range(1..=3), shared: rng.gen_bool(0.7) });
        }
        let last = k + 1 == strides.len();
        let channels = if last { rng.gen_range(1..=2) } else { rng.gen_range(1..=3) };
        layers.push(LayerSpec { receptive: stride, stride, channels, shared: rng.gen_bool(0.7) });
    }
    NetworkSpec::new(width, rep_channels, layers)
}

/// `(H, M)` pairs whose grid tensors fit under the default cap.
pub const LEMMA1_SHAPES: [(usize, usize); 3] = [(2, 2), (2, 3), (4, 2)];

fn lemma1(opts: &VerifyOptions) -> Vec<CaseResult> {
    (0..opts.trials)
        .map(|t| {
            let seed = opts.seed.wrapping_add(t as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (h, m) = LEMMA1_SHAPES[rng.gen_range(0..LEMMA1_SHAPES.len())];
            case(format!("random spec seed {seed} (H={h}, M={m})"), || {
                let spec = random_non_overlapping_spec(&mut rng, h, m)?;
                let params = random_params(&spec, seed, &default_value_grid())?;
                let bound = spec.input_channels(spec.depth() - 1);
                let mut ok = true;
                let mut detail = format!("{} layers, D^(L-1) = {bound}:", spec.depth());
                for kind in PartitionKind::ALL {
                    let (rank, mismatch) = ranks(&spec, &params, &kind.partition(h)?, opts)?;
                    ok &= rank <= bound && mismatch.is_none();
                    detail += &format!(" {} rank {rank}{}", kind.name(), mode_note(mismatch));
                }
                Ok((ok, detail))
            })
        })
        .collect()
}

/// `(H, M, R, S, D)` for the wide-layer rank fixtures.
pub const CLAIM3_FIXTURES: [(usize, usize, usize, usize, usize); 3] = [(2, 2, 2, 1, 2), (4, 2, 3, 1, 2), (4, 2, 3, 2, 2)];

fn thm1(opts: &VerifyOptions) -> Vec<CaseResult> {
    let mut out = Vec::new();
    for (h, m, r, s, d) in CLAIM3_FIXTURES {
        for kind in PartitionKind::ALL {
            out.push(case(format!("wide layer H={h} M={m} R={r} S={s} D={d} {}", kind.name()), || {
                let cfg = ConstructionConfig::new(h, m, r, s, d, kind)?;
                let spec = claim3_spec(&cfg)?;
                let params = claim3_params(&cfg, &spec)?;
                let (rank, mismatch) = ranks(&spec, &params, &kind.partition(h)?, opts)?;
                let expected = cfg.expected_rank();
                let ok = BigUint::from(rank) == expected && mismatch.is_none();
                Ok((ok, format!("rank {rank}, expected {expected}{}", mode_note(mismatch))))
            }));
        }
        out.push(case(format!("pair matrix H={h} M={m} R={r} S={s} D={d}"), || {
            let cfg = ConstructionConfig::new(h, m, r, s, d, PartitionKind::LeftRight)?;
            let rank = pair_matrix(&cfg)?.rank()?;
            Ok((rank == d, format!("rank {rank}, expected {d}")))
        }));
    }

    out.push(genericity(opts));

    let s = LayerSpec::new;
    let pipelines = [
        spec(4, 2, &[s(2, 1, 4), s(2, 2, 4), s(2, 2, 1)]),
        spec(4, 2, &[s(3, 1, 4), s(1, 1, 2), s(4, 4, 1)]),
        spec(4, 2, &[s(2, 1, 4), s(2, 1, 4), s(2, 2, 2), s(2, 2, 1)]),
    ];
    for (k, net) in pipelines.iter().enumerate() {
        for kind in PartitionKind::ALL {
            out.push(case(format!("pipeline #{} {}", k + 1, kind.name()), || {
                let c = theorem1_params(net, kind, None)?;
                let bound = theorem1_bound(net)?.best.bound;
                let (rank, mismatch) = ranks(net, &c.params, &kind.partition(net.width())?, opts)?;
                let ok = BigUint::from(rank) == c.expected_rank && c.expected_rank >= bound && mismatch.is_none();
                Ok((
                    ok,
                    format!(
                        "layer {} rank {rank}, construction {} , analyzer bound {bound}{}",
                        c.layer,
                        c.expected_rank,
                        mode_note(mismatch)
                    ),
                ))
            }));
        }
    }
    out
}

/// Random parameters on the smallest wide-layer spec reach the bound under
/// both standard partitions for at least 99% of seeds.
///
/// Ranks are exact only: the wide value grid produces matrices whose
/// condition numbers exceed what a float threshold can certify.
fn genericity(opts: &VerifyOptions) -> CaseResult {
    let opts = &VerifyOptions { cross_check: false, ..opts.clone() };
    case(format!("genericity over {} seeds", opts.trials), || {
        let cfg = ConstructionConfig::new(2, 2, 2, 1, 2, PartitionKind::LeftRight)?;
        let spec = claim3_spec(&cfg)?;
        let bound = cfg.expected_rank();
        let mut failures = Vec::new();
        for t in 0..opts.trials {
            let seed = opts.seed.wrapping_add(t as u64);
            let params = random_params(&spec, seed, &fine_value_grid())?;
            for kind in PartitionKind::ALL {
                let (rank, mismatch) = ranks(&spec, &params, &kind.partition(2)?, opts)?;
                if BigUint::from(rank) < bound || mismatch.is_some() {
                    failures.push(format!("seed {seed} {} rank {rank}{}", kind.name(), mode_note(mismatch)));
                    break;
                }
            }
        }
        let passed = opts.trials - failures.len();
        let ok = 100 * passed >= 99 * opts.trials;
        let mut detail = format!("{passed}/{} seeds reach rank {bound} under both partitions", opts.trials);
        if !failures.is_empty() {
            detail += &format!("; failures: {}", failures.join(", "));
        }
        Ok((ok, detail))
    })
}

/// A shared layer using only `(0, 0)` and the far corner, with random
/// anchor weights and biases.
fn random_two_anchor_layer(
    rng: &mut ChaCha8Rng,
    layer: LayerSpec,
    in_channels: usize,
    out_size: usize,
    kind: PartitionKind,
) -> Result<LayerParams<Rational>> {
    let r = layer.receptive;
    let far = match kind {
        PartitionKind::LeftRight => (0, r - 1),
        PartitionKind::TopBottom => (r - 1, 0),
    };
    let grid = default_value_grid();
    let filters = (0..layer.channels)
        .map(|_| {
            let mut f = Filter::constant(in_channels, r, Rational::from_int(1));
            for (j, i) in [(0, 0), far] {
                f.set_bias(j, i, grid[rng.gen_range(0..grid.len())].clone());
                for d in 0..in_channels {
                    f.set_weight(d, j, i, grid[rng.gen_range(0..grid.len())].clone());
                }
            }
            f
        })
        .collect();
    LayerParams::from_channel_filters(layer, in_channels, out_size, filters)
}

/// Layer stacks at `H = 4, M = 2` with the channel count `D` they simulate.
pub fn claim4_stacks() -> Vec<(Vec<LayerSpec>, usize)> {
    let s = LayerSpec::new;
    vec![
        (vec![s(2, 1, 4), s(2, 2, 2)], 2),
        (vec![s(3, 1, 2), s(1, 1, 2)], 2),
        (vec![s(2, 1, 2), s(2, 1, 2), s(1, 1, 1)], 1),
        (vec![s(2, 1, 4), s(2, 1, 4), s(2, 2, 3)], 2),
        (vec![s(3, 1, 2)], 2),
    ]
}

fn claim4(opts: &VerifyOptions) -> Vec<CaseResult> {
    let (h, m) = (4, 2);
    let mut out = Vec::new();
    for (k, (stack, d)) in claim4_stacks().into_iter().enumerate() {
        for kind in PartitionKind::ALL {
            for random in [false, true] {
                let label = if random { "random anchors" } else { "wide-layer anchors" };
                out.push(case(format!("stack #{} {} {label}", k + 1, kind.name()), || {
                    let phi = NetworkSpec::new(h, m, stack.clone())?;
                    let depth = phi.depth();
                    let r = alpha_min_receptive(&phi, depth, (h / 2) as u64)?.value as usize;
                    let stride = total_stride(&phi, depth)? as usize;
                    let wide = LayerSpec::new(r, stride, d);
                    let seed = opts.seed.wrapping_add(k as u64);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let psi = if random {
                        random_two_anchor_layer(&mut rng, wide, m, h.div_ceil(stride), kind)?
                    } else {
                        claim3_psi_layer(&ConstructionConfig::new(h, m, r, stride, d, kind)?, wide)?
                    };
                    let params = claim4_compile(h, m, &psi, &stack)?;
                    let psi_net = NetworkSpec::new(h, m, vec![wide])?;
                    let (ok, detail) =
                        outputs_match(&phi, &params, &psi_net, &NetworkParams::new(vec![psi]), opts.inputs, &mut rng)?;
                    Ok((ok, format!("R={r} S={stride} D={d}: {detail}")))
                }));
            }
        }
    }
    out
}

fn thm3(opts: &VerifyOptions) -> Vec<CaseResult> {
    let mut out = Vec::new();
    for m in [2, 3] {
        for shared in [false, true] {
            let d = if shared { m * 4 } else { m };
            for part in even_partitions(4) {
                out.push(case(format!("H=2 M={m} {} D={d} {part}", if shared { "shared" } else { "unshared" }), || {
                    check_theorem3(2, m, d, shared, &part, opts)
                }));
            }
        }
    }
    out
}

fn check_theorem3(
    h: usize,
    m: usize,
    d: usize,
    shared: bool,
    part: &IndexPartition,
    opts: &VerifyOptions,
) -> Result<(bool, String)> {
    let spec = theorem3_spec(h, m, d, shared)?;
    let params = theorem3_params(&spec, part, &Matrix::identity(m))?;
    let (rank, mismatch) = ranks(&spec, &params, part, opts)?;
    let expected = big_pow(m as u64, (h * h / 2) as u64);
    Ok((BigUint::from(rank) == expected && mismatch.is_none(), format!("rank {rank}, expected {expected}{}", mode_note(mismatch))))
}

fn prop2() -> Vec<CaseResult> {
    let m = 64;
    let mut out = Vec::new();
    for b in 1..=7usize {
        for depth in 1..=6u32 {
            let h = 1usize << depth;
            out.push(case(format!("conv-pool B={b} H={h}"), || convpool_case(b, h, m)));
        }
    }
    out.push(case("B=5 H=32 M=64 reaches 64^20", || {
        let p = prop2_bound(5, 32, 64)?;
        let floor = big_pow(64, 20);
        Ok((p.exact_bound >= floor, format!("exact bound 64^{}", p.exact_exponent)))
    }));
    out.push(case("two stacked 3x3 convolutions act as B=5", || {
        let b = vgg_effective_block(2, 3);
        let p = prop2_bound(b, 32, 64)?;
        Ok((b == 5 && p.exact_bound >= big_pow(64, 20), format!("B={b}, exact bound 64^{}", p.exact_exponent)))
    }));
    out
}

fn convpool_case(b: usize, h: usize, m: usize) -> Result<(bool, String)> {
    let spec = convpool_spec(b, h, m, 2 * m)?;
    let depth = h.trailing_zeros() as usize;
    for l in 1..=depth {
        let gc = 2 * l - 1;
        let ts = total_stride(&spec, gc)?;
        let tr = total_receptive(&spec, gc)?;
        let want_tr = ((2 * b - 1) << (l - 1)) as u64 + 1 - b as u64;
        if ts != 1 << (l - 1) || tr != want_tr {
            return Ok((false, format!("layer {gc}: T_S={ts} T_R={tr}, closed form {} and {want_tr}", 1 << (l - 1))));
        }
        if b >= 2 {
            for alpha in (1u64 << (l - 1))..((1u64 << l) - 1) {
                let am = alpha_min_receptive(&spec, gc, alpha)?.value;
                if am != alpha + 1 {
                    return Ok((false, format!("layer {gc}, alpha {alpha}: minimal field {am}, closed form {}", alpha + 1)));
                }
            }
        }
    }
    if b < 2 {
        return Ok((true, "closed forms hold (1x1 blocks give no bound)".into()));
    }
    let p = prop2_bound(b, h, m)?;
    let report = theorem1_bound(&spec)?;
    let ok = report.best.bound == p.exact_bound
        && p.exact_at_least_closed_form
        && (!p.quarter_applies || p.exact_at_least_quarter);
    Ok((
        ok,
        format!(
            "bound {m}^{} (layer {}), closed form {m}^{} with l={}, smooth exponent {:.3}",
            report.best.exponent,
            report.best.layer,
            p.exact_exponent,
            p.first_block,
            p.closed_form_exponent.to_f64()
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("all".parse::<Suite>().is_err());
    }

    #[test]
    fn random_specs_are_non_overlapping_and_collapse_last() {
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for (h, m) in LEMMA1_SHAPES {
                let spec = random_non_overlapping_spec(&mut rng, h, m).unwrap();
                assert!(spec.is_non_overlapping() && spec.is_collapsing());
                let sizes = spec.spatial_sizes();
                assert!(sizes[sizes.len() - 2] > 1);
            }
        }
    }

    #[test]
    fn prop2_suite_passes() {
        let r = run_suite(Suite::Prop2, &VerifyOptions::default());
        assert!(r.passed, "{:#?}", r.cases.iter().filter(|c| !c.passed).collect::<Vec<_>>());
    }
}
