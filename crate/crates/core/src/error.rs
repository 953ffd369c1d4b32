use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what}: argument {value} outside domain")]
    Domain { what: &'static str, value: f64 },

    #[error("state outside the admissible set: {0}")]
    Membership(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("vehicle {vehicle} left its corridor at x = {x}")]
    CorridorExit { vehicle: usize, x: f64 },

    #[error("solver abort at t = {t}: {reason}")]
    SolverAbort { t: f64, reason: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
