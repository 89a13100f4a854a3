//! Explicit parameter assignments that attain the rank lower bounds.
//!
//! All builders emit exact rational parameters; convert with
//! [`NetworkParams::to_f64`](crate::network::NetworkParams::to_f64) for float
//! mode.

mod claim3;
mod claim4;
mod random;
mod tail;
mod theorem3;

pub use claim3::{claim3_exponent, claim3_params, claim3_psi_layer, claim3_spec, pair_matrix, ConstructionConfig};
pub use claim4::{anchor_orientation, claim4_compile, theorem1_params, Theorem1Construction};
pub use random::{default_value_grid, fine_value_grid, random_input, random_params, random_representation};
pub use tail::tail_layers;
pub use theorem3::{pair_anchors, theorem3_params, theorem3_spec, PairAnchor};
