use thiserror::Error;

/// Errors raised by the numerical routines outside the model language.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("computation failed: {0}")]
    Computation(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("non-finite field value detected at step {step}")]
    NonFinite { step: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}

impl Error {
    /// The message without the category prefix.
    pub fn message(&self) -> String {
        match self {
            Error::Parameter(m) | Error::Validation(m) | Error::Computation(m) | Error::Fit(m) => m.clone(),
            Error::NonFinite { step } => format!("non-finite field value detected at step {step}"),
        }
    }
}
