//! Total strides, total receptive fields and the smallest receptive field
//! above a target, with the window sizes that reach it.

use convac::analysis::{alpha_min_receptive, layer_table};
use convac::{LayerSpec, NetworkSpec};

fn main() -> convac::Result<()> {
    let s = LayerSpec::new;
    let spec = NetworkSpec::new(32, 3, vec![s(3, 1, 16), s(3, 1, 16), s(2, 2, 16), s(5, 1, 32), s(2, 2, 32), s(8, 8, 10)])?;
    let (strides, fields) = layer_table(&spec)?;
    println!("layer  R  S   T_S  T_R");
    for (l, layer) in spec.layers().iter().enumerate() {
        println!("{:>5} {:>2} {:>2} {:>5} {:>4}", l + 1, layer.receptive, layer.stride, strides[l], fields[l]);
    }
    for alpha in [4, 9, 13] {
        let a = alpha_min_receptive(&spec, 4, alpha)?;
        println!("layer 4, field above {alpha}: {} via windows {:?}", a.value, a.windows);
    }
    Ok(())
}
