use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("user {user} has an all-zero beamspace channel")]
    DegenerateChannel { user: usize },

    #[error("beam {beam} has no users")]
    EmptyBeam { beam: usize },

    #[error("degenerate matrix: {0}")]
    DegenerateMatrix(String),

    /// The Gram matrix of the channel to be inverted is (near) singular.
    #[error("precoding failed: condition number {condition:.3e} exceeds {limit:.0e}")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
