use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("matrix is identically zero")]
    ZeroMatrix,
    #[error("numerically dependent columns (column {0})")]
    DependentColumns(usize),
    #[error("matrix is singular")]
    Singular,
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A numerical hypothesis of a bound or construction does not hold.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("noise model mismatch: expected {expected}, got {got}")]
    ModelMismatch { expected: String, got: String },
    #[error("tolerance below horizon, unreachable")]
    Unreachable,
    #[error("gave up after {0} redraws: {1}")]
    RedrawExhausted(usize, String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a mathematical precondition, as opposed to bad
    /// input or configuration.
    pub fn is_hypothesis(&self) -> bool {
        matches!(
            self,
            Error::Hypothesis(_) | Error::Unreachable | Error::Singular | Error::RedrawExhausted(..)
        )
    }
}
