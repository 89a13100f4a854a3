//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the summary is always printed; exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use convac::analysis::{
    alpha_min_receptive, convpool_spec, prop2_bound, theorem1_bound, total_receptive, total_stride,
    vgg_effective_block,
};
use convac::constructions::{
    claim3_params, claim3_spec, fine_value_grid, random_params, default_value_grid, theorem3_params, theorem3_spec,
    ConstructionConfig,
};
use convac::grid::{even_partitions, exact_rank, float_rank, PartitionKind, DEFAULT_GRID_CAP};
use convac::verify::{random_non_overlapping_spec, run_suite, Suite, VerifyOptions, LEMMA1_SHAPES};
use convac::{IndexPartition, Matrix, NetworkParams, NetworkSpec, Rational};

type Check = Result<String, String>;

fn pow(base: u64, exp: u64) -> BigUint {
    BigUint::from(base).pow(exp as u32)
}

/// A rank fixture shared with the float-agreement criterion.
struct Fixture {
    label: String,
    spec: NetworkSpec,
    params: NetworkParams<Rational>,
    part: IndexPartition,
    exact: usize,
}

fn exact(spec: &NetworkSpec, params: &NetworkParams<Rational>, part: &IndexPartition) -> Result<usize, String> {
    let m = spec.rep_channels();
    exact_rank(spec, params, &Matrix::identity(m), part, DEFAULT_GRID_CAP)
        .map(|r| r.rank)
        .map_err(|e| e.to_string())
}

fn claim3_rank(fixtures: &mut Vec<Fixture>) -> Check {
    // (H, M, R, S, D) and the rank written out by hand.
    let cases = [((2usize, 2, 2, 1, 2), 4u64), ((4, 2, 3, 1, 2), 256), ((4, 2, 3, 2, 2), 4)];
    let mut notes = Vec::new();
    for ((h, m, r, s, d), want) in cases {
        let exponent = ((h - r) / s + 1) * h.div_ceil(s);
        assert_eq!(pow(d as u64, exponent as u64), BigUint::from(want), "hand-written fixture value");
        for kind in PartitionKind::ALL {
            let cfg = ConstructionConfig::new(h, m, r, s, d, kind).map_err(|e| e.to_string())?;
            let spec = claim3_spec(&cfg).map_err(|e| e.to_string())?;
            let params = claim3_params(&cfg, &spec).map_err(|e| e.to_string())?;
            let part = kind.partition(h).map_err(|e| e.to_string())?;
            let rank = exact(&spec, &params, &part)?;
            if rank as u64 != want {
                return Err(format!("H={h} R={r} S={s} {}: rank {rank}, want {want}", kind.name()));
            }
            fixtures.push(Fixture { label: format!("wide layer H={h} R={r} S={s} {}", kind.name()), spec, params, part, exact: rank });
        }
        notes.push(format!("{want}"));
    }
    Ok(format!("ranks {} under both partitions", notes.join(", ")))
}

fn lemma1_bound(fixtures: &mut Vec<Fixture>) -> Check {
    let mut held = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (h, m) = LEMMA1_SHAPES[rng.gen_range(0..LEMMA1_SHAPES.len())];
        let spec = random_non_overlapping_spec(&mut rng, h, m).map_err(|e| e.to_string())?;
        let params = random_params(&spec, seed, &default_value_grid()).map_err(|e| e.to_string())?;
        // D^(L-1): channels entering the last layer.
        let bound = if spec.depth() == 1 { m } else { spec.layers()[spec.depth() - 2].channels };
        let mut ok = true;
        for kind in PartitionKind::ALL {
            let part = kind.partition(h).map_err(|e| e.to_string())?;
            let rank = exact(&spec, &params, &part)?;
            ok &= rank <= bound;
            if seed < 10 {
                fixtures.push(Fixture { label: format!("random non-overlapping seed {seed} {}", kind.name()), spec: spec.clone(), params: params.clone(), part, exact: rank });
            }
        }
        if !ok {
            return Err(format!("seed {seed}: rank above {bound}"));
        }
        held += 1;
    }
    Ok(format!("{held}/100 random specs within D^(L-1)"))
}

fn genericity() -> Check {
    let cfg = ConstructionConfig::new(2, 2, 2, 1, 2, PartitionKind::LeftRight).map_err(|e| e.to_string())?;
    let spec = claim3_spec(&cfg).map_err(|e| e.to_string())?;
    let mut failures = Vec::new();
    for seed in 0..100u64 {
        let params = random_params(&spec, seed, &fine_value_grid()).map_err(|e| e.to_string())?;
        for kind in PartitionKind::ALL {
            let rank = exact(&spec, &params, &kind.partition(2).map_err(|e| e.to_string())?)?;
            if rank < 4 {
                failures.push(format!("seed {seed} {} rank {rank}", kind.name()));
                break;
            }
        }
    }
    let passed = 100 - failures.len();
    let msg = format!("{passed}/100 seeds reach rank 4{}", if failures.is_empty() { String::new() } else { format!(" (failures: {})", failures.join(", ")) });
    if passed >= 99 { Ok(msg) } else { Err(msg) }
}

fn suite(s: Suite) -> Check {
    let opts = VerifyOptions { inputs: 50, ..VerifyOptions::default() };
    let report = run_suite(s, &opts);
    let msg = format!("{}/{} cases", report.passed_cases, report.total_cases);
    if report.passed {
        Ok(msg)
    } else {
        let failed: Vec<_> = report.cases.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.name, c.detail)).collect();
        Err(format!("{msg}; {}", failed.join("; ")))
    }
}

fn claim4_equivalence() -> Check {
    let msg = suite(Suite::Claim4)?;
    let stacks = convac::verify::claim4_stacks().len();
    if stacks < 3 {
        return Err(format!("only {stacks} stacks"));
    }
    Ok(format!("{msg} over {stacks} stacks at H=4, 50 inputs each"))
}

fn theorem3(fixtures: &mut Vec<Fixture>) -> Check {
    let mut n = 0;
    for m in [2usize, 3] {
        let want = m * m;
        for (shared, d) in [(false, m), (true, 4 * m)] {
            let spec = theorem3_spec(2, m, d, shared).map_err(|e| e.to_string())?;
            for part in even_partitions(4) {
                let params = theorem3_params(&spec, &part, &Matrix::identity(m)).map_err(|e| e.to_string())?;
                let rank = exact(&spec, &params, &part)?;
                if rank != want {
                    return Err(format!("M={m} shared={shared} {part}: rank {rank}, want {want}"));
                }
                n += 1;
                fixtures.push(Fixture { label: format!("full-rank M={m} shared={shared} {part}"), spec: spec.clone(), params, part, exact: rank });
            }
        }
    }
    Ok(format!("{n} constructions reach M^(H^2/2)"))
}

fn closed_forms() -> Check {
    let m = 64u64;
    let mut checked = 0;
    for b in 1..=7u64 {
        for l_total in 1..=6u32 {
            let h = 1usize << l_total;
            let spec = convpool_spec(b as usize, h, m as usize, 2 * m as usize).map_err(|e| e.to_string())?;
            for l in 1..=l_total as u64 {
                let gc = 2 * l as usize - 1;
                let ts = total_stride(&spec, gc).map_err(|e| e.to_string())?;
                let tr = total_receptive(&spec, gc).map_err(|e| e.to_string())?;
                if ts != 1 << (l - 1) || tr != (2 * b - 1) * (1 << (l - 1)) - b + 1 {
                    return Err(format!("B={b} H={h} l={l}: T_S={ts} T_R={tr}"));
                }
                if b >= 2 {
                    for alpha in (1u64 << (l - 1))..((1u64 << l) - 1) {
                        let got = alpha_min_receptive(&spec, gc, alpha).map_err(|e| e.to_string())?.value;
                        if got != alpha + 1 {
                            return Err(format!("B={b} H={h} layer {gc} alpha {alpha}: {got}"));
                        }
                    }
                }
            }
            if b >= 2 {
                // l = 1 + floor(log2((2^L + 2B - 2) / (2B - 1))), by integer search.
                let mut k = 0;
                while (2 * b - 1) << (k + 1) <= (1u64 << l_total) + 2 * b - 2 {
                    k += 1;
                }
                let l = k + 1;
                let want = pow(m, 1u64 << (2 * l_total as u64 - 2 * l + 1));
                let got = theorem1_bound(&spec).map_err(|e| e.to_string())?.best.bound;
                if got != want {
                    return Err(format!("B={b} H={h}: bound {got}, closed form with l={l} gives {want}"));
                }
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} (B, L) pairs match"))
}

fn vgg_scale_bound() -> Check {
    let floor = pow(64, 20);
    let p = prop2_bound(5, 32, 64).map_err(|e| e.to_string())?;
    let b = vgg_effective_block(2, 3);
    let q = prop2_bound(b, 32, 64).map_err(|e| e.to_string())?;
    if p.exact_bound >= floor && b == 5 && q.exact_bound >= floor {
        Ok(format!("B=5 H=32 M=64 bound 64^{}; two 3x3 convolutions give B={b}", p.exact_exponent))
    } else {
        Err(format!("bound 64^{}, effective B={b}", p.exact_exponent))
    }
}

fn cross_mode(fixtures: &[Fixture]) -> Check {
    for f in fixtures {
        let m = f.spec.rep_channels();
        let r = float_rank(&f.spec, &f.params.to_f64(), &Matrix::<f64>::identity(m), &f.part, DEFAULT_GRID_CAP, 1e-9)
            .map_err(|e| e.to_string())?;
        if r.rank != f.exact {
            return Err(format!("{}: float {} vs exact {}", f.label, r.rank, f.exact));
        }
    }
    Ok(format!("{} fixtures agree", fixtures.len()))
}

fn main() {
    let mut fixtures = Vec::new();
    let mut results: Vec<(&str, Check, Duration)> = Vec::new();
    let mut record = |name, f: &mut dyn FnMut() -> Check| {
        let start = Instant::now();
        let r = f();
        results.push((name, r, start.elapsed()));
    };
    record("1 wide-layer rank attainment", &mut || claim3_rank(&mut fixtures));
    record("2 non-overlapping upper bound", &mut || lemma1_bound(&mut fixtures));
    record("3 genericity of full rank", &mut genericity);
    record("4 lifted parameters are equivalent", &mut || suite(Suite::Prop1));
    record("5 stacked layers simulate a wide layer", &mut claim4_equivalence);
    record("6 unshared and shared full rank", &mut || theorem3(&mut fixtures));
    record("7 conv-pool closed forms", &mut closed_forms);
    record("8 64^20 lower bound", &mut vgg_scale_bound);
    record("9 float rank equals exact rank", &mut || cross_mode(&fixtures));

    let mut failed = 0;
    for (name, result, elapsed) in &results {
        match result {
            Ok(msg) => println!("PASS criterion {name}: {msg} [{elapsed:.2?}]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name}: {msg} [{elapsed:.2?}]");
            }
        }
    }
    println!("{}/{} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
