use thiserror::Error;

/// Errors raised across the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid distance: {0} m (must be positive)")]
    InvalidDistance(f64),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("noise amplitude is zero; use the noiseless floor instead")]
    ZeroNoise,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("eigen-solver failed with LAPACK info = {0}")]
    Eigen(i32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dim_err(msg: impl Into<String>) -> Error {
    Error::InvalidDimension(msg.into())
}
