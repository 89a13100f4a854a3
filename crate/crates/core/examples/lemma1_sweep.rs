//! Random networks without overlapping windows never exceed rank
//! D^(L-1) under the two standard partitions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use convac::constructions::{default_value_grid, random_params};
use convac::grid::{exact_rank, PartitionKind, DEFAULT_GRID_CAP};
use convac::verify::random_non_overlapping_spec;
use convac::Matrix;

fn main() -> convac::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..8u64 {
        let (h, m) = if trial % 2 == 0 { (2, 3) } else { (4, 2) };
        let spec = random_non_overlapping_spec(&mut rng, h, m)?;
        let params = random_params(&spec, trial, &default_value_grid())?;
        let bound = spec.input_channels(spec.depth() - 1);
        let layers: Vec<_> = spec.layers().iter().map(|l| (l.receptive, l.channels)).collect();
        for kind in PartitionKind::ALL {
            let r = exact_rank(&spec, &params, &Matrix::identity(m), &kind.partition(h)?, DEFAULT_GRID_CAP)?;
            println!("H={h} M={m} {layers:?} {:<10} rank {} <= {bound}", kind.name(), r.rank);
        }
    }
    Ok(())
}
