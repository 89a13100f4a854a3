//! Command-line front end: `analyze`, `rank`, `verify` and `equiv`.
//!
//! [`run`] takes the argument list and output sinks and returns the exit
//! code: 0 on success, 1 when a verification or equivalence check fails, 2
//! for usage, parse and precondition errors.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::analysis::{alpha_min_receptive, prop2_bound, theorem1_bound, total_receptive, total_stride};
use crate::constructions::{
    claim3_params, claim3_psi_layer, claim4_compile, default_value_grid, random_input, random_params, theorem3_params,
    ConstructionConfig,
};
use crate::error::{Error, Result};
use crate::grid::{exact_rank, float_rank, PartitionKind, RankReport};
use crate::io::{read_arch, read_params, ArchDocument};
use crate::lift::lift_params;
use crate::matrix::Matrix;
use crate::network::{forward_network, LayerSpec, NetworkParams, NetworkSpec};
use crate::scalar::{Rational, ScalarMode, DEFAULT_TOL};
use crate::tensor::IndexPartition;
use crate::verify::{run_suite, Suite, SuiteReport, VerifyOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "convac", version, about = "Rank analysis of overlapping convolutional arithmetic circuits")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Largest grid tensor (M^(H^2) entries) that may be enumerated.
    #[arg(long, global = true, default_value_t = crate::grid::DEFAULT_GRID_CAP)]
    pub cap: u64,
    /// Worker threads for grid enumeration (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-layer strides and receptive fields, and the rank lower bound.
    Analyze {
        arch: PathBuf,
    },
    /// Rank of the matricized grid tensor for given parameters.
    Rank {
        arch: PathBuf,
        /// claim3 | theorem3 | random:<seed> | file:<path>
        #[arg(long)]
        params: String,
        /// left-right | top-bottom | custom:<modes>|<modes> (1-based, e.g. 1,4|2,3)
        #[arg(long, default_value = "left-right")]
        partition: String,
        /// exact | float (default: exact for H <= 4)
        #[arg(long)]
        mode: Option<ScalarMode>,
        /// Relative singular-value tolerance in float mode.
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Run the self-checking suites.
    Verify {
        /// all | prop1 | lemma1 | thm1 | claim4 | thm3 | prop2
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Random inputs per equivalence fixture.
        #[arg(long, default_value_t = 50)]
        inputs: usize,
        /// Skip the float-mode rank comparison.
        #[arg(long)]
        no_cross_check: bool,
    },
    /// Check that two architectures compute the same function.
    ///
    /// With two files, random parameters of the second are lifted onto the
    /// first. With `--claim4`, a single wide two-anchor layer is compiled
    /// onto the given layer stack.
    Equiv {
        #[arg(long)]
        claim4: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        inputs: usize,
        #[arg(required = true, num_args = 1..=2)]
        files: Vec<PathBuf>,
    },
}

/// Outcome of a command: the rendered report and whether checks passed.
struct Outcome {
    text: String,
    json: Value,
    passed: bool,
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{rendered}");
                0
            } else {
                let _ = write!(err, "{rendered}");
                2
            };
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(Error::Precondition(format!("cannot start {n} threads: {e}"))),
        },
        None => dispatch(&cli),
    };
    match result {
        Ok(outcome) => {
            let _ = match cli.format {
                Format::Text => write!(out, "{}", outcome.text),
                Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&outcome.json).expect("reports serialize")),
            };
            if outcome.passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Analyze { arch } => analyze(arch),
        Command::Rank { arch, params, partition, mode, tol } => rank(arch, params, partition, *mode, *tol, cli.cap),
        Command::Verify { suite, seed, trials, inputs, no_cross_check } => {
            let opts = VerifyOptions {
                seed: *seed,
                trials: *trials,
                inputs: *inputs,
                cap: cli.cap,
                tol: DEFAULT_TOL,
                cross_check: !no_cross_check,
            };
            verify(suite, &opts)
        }
        Command::Equiv { claim4, seed, inputs, files } => equiv(*claim4, files, *seed, *inputs),
    }
}

fn analyze(path: &Path) -> Result<Outcome> {
    let spec = read_arch(path)?;
    let shape = spec.validate();
    let mut text = format!(
        "H={} M={} layers={} collapsing={} non-overlapping={}\n",
        spec.width(),
        spec.rep_channels(),
        spec.depth(),
        shape.collapsing,
        shape.non_overlapping
    );
    text += "layer    R    S    D  shared  size   T_S   T_R  overlap\n";
    let mut rows = Vec::new();
    for (idx, layer) in spec.layers().iter().enumerate() {
        let ts = total_stride(&spec, idx + 1)?;
        let tr = total_receptive(&spec, idx + 1)?;
        let _ = writeln!(
            text,
            "{:>5} {:>4} {:>4} {:>4}  {:>6} {:>5} {:>5} {:>5}  {}",
            idx + 1,
            layer.receptive,
            layer.stride,
            layer.channels,
            if layer.shared { "yes" } else { "no" },
            shape.spatial_sizes[idx + 1],
            ts,
            tr,
            if layer.is_overlapping() { "yes" } else { "no" }
        );
        rows.push(json!({"layer": idx + 1, "R": layer.receptive, "S": layer.stride, "D": layer.channels,
            "shared": layer.shared, "size": shape.spatial_sizes[idx + 1], "T_S": ts, "T_R": tr,
            "overlapping": layer.is_overlapping()}));
    }

    let mut bound_json = Value::Null;
    let mut skipped = Value::Null;
    match theorem1_bound(&spec) {
        Ok(report) => {
            for c in &report.candidates {
                let _ = writeln!(
                    text,
                    "layer {}: alpha-minimal field {} (windows {:?}), T_S={}, bound {}^{}",
                    c.layer, c.alpha_minimal, c.windows, c.total_stride, c.base, c.exponent
                );
            }
            let b = &report.best;
            let log = report.log10.map_or("-inf".to_string(), |l| format!("{l:.3}"));
            let _ = writeln!(text, "lower bound on rank: {}^{} (layer {}, log10 = {log})", b.base, b.exponent, b.layer);
            let _ = writeln!(text, "  = {}", b.bound);
            if report.trivial {
                text += "  trivial: no better than a single channel count\n";
            }
            bound_json = serde_json::to_value(&report)?;
        }
        Err(e) => {
            let _ = writeln!(text, "bound skipped: {e}");
            skipped = Value::String(e.to_string());
        }
    }

    let mut convpool_json = Value::Null;
    if let Some(block) = convpool_block(&spec) {
        let p = prop2_bound(block, spec.width(), spec.rep_channels())?;
        let _ = writeln!(
            text,
            "conv-pool family B={block}: exact {m}^{} (l={}), smooth {m}^{:.3}, limit {m}^{:.1}",
            p.exact_exponent,
            p.first_block,
            crate::scalar::Scalar::to_f64(&p.closed_form_exponent),
            crate::scalar::Scalar::to_f64(&p.limit_exponent),
            m = spec.rep_channels()
        );
        convpool_json = serde_json::to_value(&p)?;
    }
    let json = json!({
        "arch": ArchDocument::from_spec(&spec),
        "shape": shape,
        "layers": rows,
        "bound": bound_json,
        "bound_skipped": skipped,
        "convpool": convpool_json,
    });
    Ok(Outcome { text, json, passed: true })
}

/// Block size `B` if `spec` alternates `(B, 1)` and `(2, 2)` layers on a
/// power-of-two grid with `B >= 2`.
fn convpool_block(spec: &NetworkSpec) -> Option<usize> {
    let h = spec.width();
    if h < 2 || !h.is_power_of_two() || spec.depth() != 2 * h.trailing_zeros() as usize {
        return None;
    }
    let b = spec.layers()[0].receptive;
    let fits = spec.layers().chunks(2).all(|pair| {
        pair[0].receptive == b && pair[0].stride == 1 && pair[1].receptive == 2 && pair[1].stride == 2
    });
    let channels_ok = spec.layers().iter().all(|l| l.channels >= 2 * spec.rep_channels());
    (b >= 2 && fits && channels_ok).then_some(b)
}

/// Parses `left-right`, `top-bottom` or `custom:1,3|2,4` (1-based modes).
pub fn parse_partition(text: &str, width: usize) -> Result<(IndexPartition, Option<PartitionKind>)> {
    if let Some(body) = text.strip_prefix("custom:") {
        let (p, q) = body
            .split_once('|')
            .ok_or_else(|| Error::InvalidPartition(format!("expected `modes|modes`, got `{body}`")))?;
        let modes = |s: &str| -> Result<Vec<usize>> {
            s.split(',')
                .map(|t| {
                    let k: usize = t
                        .trim()
                        .parse()
                        .map_err(|_| Error::InvalidPartition(format!("bad mode `{t}`")))?;
                    k.checked_sub(1).ok_or_else(|| Error::InvalidPartition("modes are 1-based".into()))
                })
                .collect()
        };
        return Ok((IndexPartition::from_sets(modes(p)?, modes(q)?, width * width)?, None));
    }
    let kind: PartitionKind = text.parse()?;
    Ok((kind.partition(width)?, Some(kind)))
}

enum Params {
    Exact(NetworkParams<Rational>),
    Float(NetworkParams<f64>),
}

fn rank(path: &Path, source: &str, partition: &str, mode: Option<ScalarMode>, tol: f64, cap: u64) -> Result<Outcome> {
    let spec = read_arch(path)?;
    spec.require_collapsing()?;
    let h = spec.width();
    let m = spec.rep_channels();
    let mode = mode.unwrap_or(if h <= 4 { ScalarMode::Exact } else { ScalarMode::Float });
    let (part, kind) = parse_partition(partition, h)?;

    let mut expected = None;
    let params = match source.split_once(':').unwrap_or((source, "")) {
        ("claim3", "") => {
            let first = spec.layers()[0];
            let d = first.channels.min(m);
            let cfg = ConstructionConfig::new(
                h,
                m,
                first.receptive,
                first.stride,
                d,
                kind.unwrap_or(PartitionKind::LeftRight),
            )?;
            if kind.is_some() {
                expected = Some(cfg.expected_rank().to_string());
            }
            Params::Exact(claim3_params(&cfg, &spec)?)
        }
        ("theorem3", "") => {
            expected = Some(crate::analysis::big_pow(m as u64, (h * h / 2) as u64).to_string());
            Params::Exact(theorem3_params(&spec, &part, &Matrix::identity(m))?)
        }
        ("random", seed) => {
            let seed: u64 = seed
                .parse()
                .map_err(|_| Error::Precondition(format!("bad seed in `{source}`")))?;
            Params::Exact(random_params(&spec, seed, &default_value_grid())?)
        }
        ("file", file) => match mode {
            ScalarMode::Exact => Params::Exact(read_params(file)?),
            ScalarMode::Float => Params::Float(read_params(file)?),
        },
        _ => {
            return Err(Error::Precondition(format!(
                "unknown params source `{source}` (claim3, theorem3, random:<seed>, file:<path>)"
            )))
        }
    };

    let report: RankReport = match (mode, params) {
        (ScalarMode::Exact, Params::Exact(p)) => exact_rank(&spec, &p, &Matrix::identity(m), &part, cap)?,
        (ScalarMode::Exact, Params::Float(_)) => unreachable!("float params are only read in float mode"),
        (ScalarMode::Float, Params::Exact(p)) => {
            float_rank(&spec, &p.to_f64(), &Matrix::<Rational>::identity(m).to_f64(), &part, cap, tol)?
        }
        (ScalarMode::Float, Params::Float(p)) => float_rank(&spec, &p, &Matrix::identity(m), &part, cap, tol)?,
    };

    let upper = spec
        .is_non_overlapping()
        .then(|| spec.input_channels(spec.depth() - 1));
    let mut text = format!(
        "partition {part}\nmatricization {}x{}, {} rank {}\n",
        report.rows, report.cols, report.mode, report.rank
    );
    if let Some(e) = &expected {
        let _ = writeln!(text, "construction predicts rank {e}");
    }
    if let Some(u) = upper {
        let _ = writeln!(text, "non-overlapping network: rank at most D^(L-1) = {u}");
    }
    if let (Some(t), Some(th)) = (report.tol, report.threshold) {
        let _ = writeln!(
            text,
            "tol {t:e}, cutoff {th:e}, singular values near cutoff {:?}",
            report.singular_values_near_threshold
        );
    }
    let json = json!({
        "partition": part.to_string(),
        "rank": report,
        "expected": expected,
        "non_overlapping_upper_bound": upper,
    });
    Ok(Outcome { text, json, passed: true })
}

fn verify(suite: &str, opts: &VerifyOptions) -> Result<Outcome> {
    let suites: Vec<Suite> = if suite == "all" { Suite::ALL.to_vec() } else { vec![suite.parse()?] };
    let reports: Vec<SuiteReport> = suites.iter().map(|&s| run_suite(s, opts)).collect();
    let mut text = String::new();
    for r in &reports {
        let _ = writeln!(
            text,
            "{} {}: {}/{} cases ({} ms)",
            if r.passed { "PASS" } else { "FAIL" },
            r.suite,
            r.passed_cases,
            r.total_cases,
            r.elapsed_ms
        );
        for c in &r.cases {
            let _ = writeln!(text, "  [{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
        }
    }
    let passed = reports.iter().all(|r| r.passed);
    Ok(Outcome { text, json: json!({ "passed": passed, "suites": reports }), passed })
}

fn equiv(claim4: bool, files: &[PathBuf], seed: u64, inputs: usize) -> Result<Outcome> {
    let (big, small, small_params, big_params, what) = if claim4 {
        if files.len() != 1 {
            return Err(Error::Precondition("--claim4 takes exactly one architecture".into()));
        }
        let phi = read_arch(&files[0])?;
        let (psi_net, psi_params, phi_params) = wide_layer_fixture(&phi)?;
        (phi, psi_net, psi_params, phi_params, "wide layer compiled onto the stack")
    } else {
        if files.len() != 2 {
            return Err(Error::Precondition("equiv takes a larger and a smaller architecture".into()));
        }
        let big = read_arch(&files[0])?;
        let small = read_arch(&files[1])?;
        let small_params = random_params(&small, seed, &default_value_grid())?;
        let big_params = lift_params(&big, &small, &small_params)?;
        (big, small, small_params, big_params, "smaller network lifted onto the larger")
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid: Vec<Rational> = (-4..=4).map(|k| Rational::new(k, 3)).collect();
    let mut failure = None;
    for k in 0..inputs {
        let x = random_input(&mut rng, big.rep_channels(), big.width(), &grid);
        let a = forward_network(&big, &big_params, &x)?;
        let b = forward_network(&small, &small_params, &x)?;
        let n = b.len();
        if a.data()[..n] != *b.data() || a.data()[n..].iter().any(|v| !v.is_zero()) {
            failure = Some(k);
            break;
        }
    }
    let passed = failure.is_none();
    let text = match failure {
        None => format!("equivalent: {what}, {inputs} random inputs agree exactly\n"),
        Some(k) => format!("NOT equivalent: {what}, outputs differ on input #{k}\n"),
    };
    let json = json!({"equivalent": passed, "inputs": inputs, "seed": seed, "first_failure": failure});
    Ok(Outcome { text, json, passed })
}

/// A single wide two-anchor layer spanning `phi`'s reach, compiled onto
/// `phi` with the most channels the stack can carry.
fn wide_layer_fixture(
    phi: &NetworkSpec,
) -> Result<(NetworkSpec, NetworkParams<Rational>, NetworkParams<Rational>)> {
    let (h, m) = (phi.width(), phi.rep_channels());
    let depth = phi.depth();
    let r = alpha_min_receptive(phi, depth, (h / 2) as u64)?.value as usize;
    let stride = total_stride(phi, depth)? as usize;
    let top = phi.layers().iter().map(|l| l.channels).min().unwrap_or(0).min(m);
    let mut last = None;
    for d in (1..=top).rev() {
        let wide = LayerSpec::new(r, stride, d);
        let cfg = ConstructionConfig::new(h, m, r, stride, d, PartitionKind::LeftRight)?;
        let psi = claim3_psi_layer(&cfg, wide)?;
        match claim4_compile(h, m, &psi, phi.layers()) {
            Ok(params) => return Ok((NetworkSpec::new(h, m, vec![wide])?, NetworkParams::new(vec![psi]), params)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::Precondition("stack has no channels to carry the wide layer".into())))
}
