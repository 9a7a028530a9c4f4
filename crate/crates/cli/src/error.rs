use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Config { path: PathBuf, source: toml::de::Error },
    #[error("{path}: {msg}")]
    Schema { path: PathBuf, msg: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Core(#[from] masslab::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{failed} of {total} criteria failed")]
    CriteriaFailed { failed: usize, total: usize },
}

impl CliError {
    /// 1 for bad input, 2 for failed criteria, 3 for numerical breakdown.
    pub fn exit_code(&self) -> u8 {
        use masslab::Error as E;
        match self {
            CliError::CriteriaFailed { .. } => 2,
            CliError::Core(E::Numerical(_) | E::StepRejected(_) | E::Resolution(_) | E::DivergentMass(_)) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
