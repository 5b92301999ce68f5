use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix pencil is singular (det(λE − A) vanishes identically)")]
    SingularPencil,

    #[error("sequence too short: {what} needs {needed} samples, got {got}")]
    Length {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("persistent excitation not reached after {0} attempts")]
    PeExhausted(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
