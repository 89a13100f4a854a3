//! Overlapping convolutional arithmetic circuits: grid tensors, matricization
//! ranks, receptive-field arithmetic, rank lower bounds and the parameter
//! constructions that attain them.

pub mod analysis;
pub mod cli;
pub mod constructions;
pub mod error;
pub mod grid;
pub mod io;
pub mod lift;
pub mod matrix;
pub mod network;
pub mod rational;
pub mod scalar;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use network::{LayerSpec, NetworkParams, NetworkSpec};
pub use scalar::{Rational, Scalar, ScalarMode};
pub use tensor::{DenseTensor, IndexPartition};
