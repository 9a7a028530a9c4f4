use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("no finite-mass self-similar solution: {0}")]
    NoFiniteMassSelfSimilar(String),
    #[error("precondition {condition} failed: {detail}")]
    PreconditionFailed { condition: String, detail: String },
    #[error("parameter out of range: {0}")]
    Range(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("time {t} outside validity window {window}")]
    TimeWindow { t: f64, window: String },
    #[error("divergent mass integral: {0}")]
    DivergentMass(String),
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("step rejected: {0}")]
    StepRejected(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn range(msg: impl Into<String>) -> Error {
    Error::Range(msg.into())
}
