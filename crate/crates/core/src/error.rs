use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("network is empty after preprocessing")]
    EmptyNetwork,

    #[error("time step {step} out of range (network has {n_steps} snapshots)")]
    StepOutOfRange { step: usize, n_steps: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("AUC undefined: need at least one positive and one negative label")]
    UndefinedAuc,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("every restart produced a non-finite objective")]
    NoFiniteRestart,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
