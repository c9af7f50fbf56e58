use thiserror::Error;

/// Errors raised by factorization, refitting, and I/O operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("degenerate basis: column {0} of the basis matrix is all zero")]
    DegenerateBasis(usize),

    #[error("undefined cosine: {0} vector is zero")]
    ZeroVector(&'static str),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("signature matching requires K <= K~; got {k_a} > {k_b}; swap the arguments")]
    MatchArgumentOrder { k_a: usize, k_b: usize },

    #[error("clustering requested {k} medoids from {n} points")]
    TooFewPoints { k: usize, n: usize },

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
