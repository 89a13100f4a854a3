//! Compiles one wide two-anchor layer onto a stack of small layers and
//! checks both give the same outputs on random inputs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use convac::analysis::{alpha_min_receptive, total_stride};
use convac::constructions::{claim3_psi_layer, claim4_compile, default_value_grid, random_input, ConstructionConfig};
use convac::grid::PartitionKind;
use convac::network::forward_network;
use convac::{LayerSpec, NetworkParams, NetworkSpec};

fn main() -> convac::Result<()> {
    let (h, m, d) = (4, 2, 2);
    let s = LayerSpec::new;
    let stack = vec![s(2, 1, 4), s(2, 1, 4), s(2, 2, 3)];
    let phi = NetworkSpec::new(h, m, stack.clone())?;
    let r = alpha_min_receptive(&phi, phi.depth(), (h / 2) as u64)?.value as usize;
    let stride = total_stride(&phi, phi.depth())? as usize;
    let wide = s(r, stride, d);
    println!("stack {:?} simulates one {r}x{r} stride-{stride} layer", stack.iter().map(|l| l.receptive).collect::<Vec<_>>());

    let psi = claim3_psi_layer(&ConstructionConfig::new(h, m, r, stride, d, PartitionKind::TopBottom)?, wide)?;
    let phi_params = claim4_compile(h, m, &psi, &stack)?;
    let psi_net = NetworkSpec::new(h, m, vec![wide])?;
    let psi_params = NetworkParams::new(vec![psi]);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid = default_value_grid();
    let mut agree = 0;
    for _ in 0..20 {
        let x = random_input(&mut rng, m, h, &grid);
        let a = forward_network(&phi, &phi_params, &x)?;
        let b = forward_network(&psi_net, &psi_params, &x)?;
        if a.data()[..b.len()] == *b.data() {
            agree += 1;
        }
    }
    println!("{agree}/20 random inputs agree on the first {d} channels");
    Ok(())
}
