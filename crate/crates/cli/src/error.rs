use std::io;
use std::path::PathBuf;

use bisolve_core::BisolveError;
use thiserror::Error;

/// Failures of a CLI invocation; each maps to one exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed config {}: {source}", path.display())]
    ConfigSyntax { path: PathBuf, source: serde_json::Error },
    #[error("config key `{key}`: {reason}")]
    ConfigKey { key: String, reason: String },
    #[error("malformed profile {}: {reason}", path.display())]
    Profile { path: PathBuf, reason: String },
    #[error("{0}")]
    Usage(String),
    #[error("refusing to write a report with an empty stage list")]
    EmptyStages,
    #[error("could not start the worker pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Solver(#[from] BisolveError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn key(key: &str, reason: impl Into<String>) -> CliError {
        CliError::ConfigKey { key: key.into(), reason: reason.into() }
    }

    /// 1 for bad input, 2 for a clean admissibility rejection, 3 for a numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(e) => match e {
                BisolveError::Admissibility(_)
                | BisolveError::Infeasible { .. }
                | BisolveError::Xi0NotFound { .. }
                | BisolveError::Verification { .. } => 2,
                BisolveError::Domain(_) => 1,
                _ => 3,
            },
            _ => 1,
        }
    }
}
