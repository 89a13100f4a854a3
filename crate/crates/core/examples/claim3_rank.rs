//! Builds the wide-layer construction for a few grid sizes and checks that
//! the matricized grid tensor reaches the predicted rank exactly.

use std::time::Instant;

use convac::constructions::{claim3_params, claim3_spec, ConstructionConfig};
use convac::grid::{build_grid_tensor, PartitionKind, DEFAULT_GRID_CAP};

fn main() -> convac::Result<()> {
    for (h, m, r, s, d) in [(2, 2, 2, 1, 2), (4, 2, 3, 1, 2), (4, 2, 3, 2, 2)] {
        for kind in PartitionKind::ALL {
            let start = Instant::now();
            let cfg = ConstructionConfig::new(h, m, r, s, d, kind)?;
            let spec = claim3_spec(&cfg)?;
            let params = claim3_params(&cfg, &spec)?;
            let grid = build_grid_tensor(&spec, &params, &cfg.representation, 0, DEFAULT_GRID_CAP)?;
            let mat = grid.matricize(&kind.partition(h)?)?;
            let rank = mat.rank()?;
            println!(
                "H={h} M={m} R={r} S={s} D={d} {:<10} {}x{} rank {rank} (expected {}) in {:.2?}",
                kind.name(),
                mat.rows(),
                mat.cols(),
                cfg.expected_rank(),
                start.elapsed()
            );
        }
    }
    Ok(())
}
