use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max |A - A^H| = {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("vector length {0} is not a perfect square")]
    NotSquareLength(usize),

    #[error("channel is numerically singular: eigenvalue {index} has magnitude {magnitude:e}")]
    SingularChannel { index: usize, magnitude: f64 },

    #[error("matrix is defective or near-defective (eigenvector condition number {0:e})")]
    Defective(f64),

    #[error("eigen-decomposition failed: {0}")]
    Eigen(String),

    #[error("measurement sequence impossible under model at step {step} (conditional probability {prob:e})")]
    ImpossibleSequence { step: usize, prob: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures that originate in the numerics rather than in
    /// configuration or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch(_)
                | Error::NotHermitian(_)
                | Error::InvalidTrace(_)
                | Error::NotPositive(_)
                | Error::NotSquareLength(_)
                | Error::SingularChannel { .. }
                | Error::Defective(_)
                | Error::Eigen(_)
                | Error::ImpossibleSequence { .. }
                | Error::InvalidState(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
