use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not orthogonal (max deviation {0:.3e})")]
    NotOrthogonal(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("pole of the Gamma function at {0}")]
    Pole(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("stencil exceeds the grid margin: {0}")]
    Margin(String),

    #[error("tail not under control: {0}")]
    Tail(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
