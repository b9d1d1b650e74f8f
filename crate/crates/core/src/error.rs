use thiserror::Error;

/// Errors raised by the geometry, solver and configuration layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or non-finite input data.
    #[error("input error: {0}")]
    Input(String),
    /// Arrays whose shapes do not agree.
    #[error("structural error: {0}")]
    Structural(String),
    /// Input that is well-formed but violates a mathematical requirement.
    #[error("validation error: {0}")]
    Validation(String),
    #[error("domain error: r = {r} is outside the admissible range ({detail})")]
    Domain { r: f64, detail: String },
    /// A configuration the reduced equations are not implemented for.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("numerical failure at t = {t}: {detail}")]
    Numerical { t: f64, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }

    pub(crate) fn numerical(t: f64, detail: impl Into<String>) -> Self {
        Error::Numerical {
            t,
            detail: detail.into(),
        }
    }
}
