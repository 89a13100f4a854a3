use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),

    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("network does not collapse to 1x1 (final spatial size {0})")]
    NotCollapsing(usize),

    #[error("grid tensor has {entries} entries, above the cap of {cap}")]
    GridTooLarge { entries: u128, cap: u64 },

    #[error("representation matrix is singular (rank {rank} < {size})")]
    SingularRepresentation { rank: usize, size: usize },

    #[error("no window sizes give a total receptive field above {alpha} at layer {layer} (maximum {max})")]
    Infeasible { layer: usize, alpha: u64, max: i64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("malformed document: {0}")]
    Document(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
