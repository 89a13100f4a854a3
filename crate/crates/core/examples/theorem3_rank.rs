//! Full-rank grid tensors for every even partition of a 2 x 2 grid, with
//! unshared filters and with shared filters over extra channels.

use convac::constructions::{theorem3_params, theorem3_spec};
use convac::grid::{build_grid_tensor, even_partitions, DEFAULT_GRID_CAP};
use convac::Matrix;

fn main() -> convac::Result<()> {
    for m in [2, 3] {
        for (shared, d) in [(false, m), (true, 4 * m)] {
            let spec = theorem3_spec(2, m, d, shared)?;
            for part in even_partitions(4) {
                let f = Matrix::identity(m);
                let params = theorem3_params(&spec, &part, &f)?;
                let grid = build_grid_tensor(&spec, &params, &f, 0, DEFAULT_GRID_CAP)?;
                let rank = grid.matricize(&part)?.rank()?;
                println!(
                    "M={m} D={d} {:<8} {part}: rank {rank} of {}",
                    if shared { "shared" } else { "unshared" },
                    m * m
                );
            }
        }
    }
    Ok(())
}
