//! Writes architecture and parameter documents and reads them back.

use convac::constructions::{claim3_params, claim3_spec, ConstructionConfig};
use convac::grid::PartitionKind;
use convac::io::{arch_to_string, params_from_json, params_to_json, parse_arch};
use convac::{NetworkParams, Rational};

fn main() -> convac::Result<()> {
    let cfg = ConstructionConfig::new(2, 2, 2, 1, 2, PartitionKind::LeftRight)?;
    let spec = claim3_spec(&cfg)?;
    let params = claim3_params(&cfg, &spec)?;

    let arch = arch_to_string(&spec);
    println!("{arch}");
    assert_eq!(parse_arch(&arch)?, spec);

    let doc = params_to_json(&params);
    let first = &doc["layers"][0]["filters"][0];
    println!("first filter: {first}");
    let back: NetworkParams<Rational> = params_from_json(&doc)?;
    assert_eq!(back, params);
    let floats: NetworkParams<f64> = params_from_json(&params_to_json(&params.to_f64()))?;
    println!("float copy has {} layers", floats.layers().len());
    Ok(())
}
