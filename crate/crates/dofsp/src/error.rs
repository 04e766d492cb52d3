use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] dofsp_core::Error),
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    /// 0 success, 1 usage or parse error, 2 assumption violated, 3 audit or
    /// verification failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(dofsp_core::Error::EmptyIntersection) => 2,
            CliError::CheckFailed(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
