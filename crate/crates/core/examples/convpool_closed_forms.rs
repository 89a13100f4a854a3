//! Closed-form bounds for alternating B x B convolution and 2 x 2 pooling,
//! compared with the bound computed on the explicit layer stack.

use convac::analysis::{convpool_spec, prop2_bound, theorem1_bound, vgg_effective_block};

fn main() -> convac::Result<()> {
    let m = 64;
    println!("  B    H   l  exact  stack  smooth   limit");
    for b in [2, 3, 5, 7] {
        for h in [8, 16, 32, 64] {
            let p = prop2_bound(b, h, m)?;
            let stack = theorem1_bound(&convpool_spec(b, h, m, 2 * m)?)?;
            println!(
                "{b:>3} {h:>4} {:>3} {:>6} {:>6} {:>7.3} {:>7.2}",
                p.first_block,
                p.exact_exponent,
                stack.best.exponent,
                p.closed_form_exponent.to_f64(),
                p.limit_exponent.to_f64()
            );
        }
    }
    let b = vgg_effective_block(2, 3);
    let p = prop2_bound(b, 32, m)?;
    println!("two 3x3 convolutions per block act as B={b}: bound {m}^{} on a 32x32 input", p.exact_exponent);
    Ok(())
}
