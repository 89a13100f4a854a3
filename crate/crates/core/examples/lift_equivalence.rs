//! Lifts a small network onto one with wider windows and an extra layer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use convac::constructions::{default_value_grid, random_input, random_params};
use convac::lift::{align, lift_params};
use convac::network::forward_network;
use convac::{LayerSpec, NetworkSpec};

fn main() -> convac::Result<()> {
    let s = LayerSpec::new;
    let small = NetworkSpec::new(4, 3, vec![s(1, 1, 3), s(2, 2, 3), s(2, 2, 1)])?;
    let big = NetworkSpec::new(4, 3, vec![s(2, 1, 3), s(3, 1, 3), s(2, 2, 3), s(2, 2, 1)])?;
    println!("alignment: {:?}", align(&big, &small)?);

    let small_params = random_params(&small, 11, &default_value_grid())?;
    let big_params = lift_params(&big, &small, &small_params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..5 {
        let x = random_input(&mut rng, 3, 4, &default_value_grid());
        let a = forward_network(&big, &big_params, &x)?;
        let b = forward_network(&small, &small_params, &x)?;
        println!("input {k}: large {} small {}", a.data()[0], b.data()[0]);
    }
    Ok(())
}
