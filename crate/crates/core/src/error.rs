use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum LisError {
    /// Invalid scenario, sweep, or command-line configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical precondition was violated (non-Hermitian, not positive
    /// definite, non-finite entries, degenerate channel, ...).
    #[error("numerical domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

impl LisError {
    /// Process exit code used by the `lis-sim` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            LisError::Config(_) | LisError::Parse(_) => 2,
            LisError::Domain(_) | LisError::Dimension(_) => 3,
            LisError::Io(_) | LisError::Csv(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, LisError>;
