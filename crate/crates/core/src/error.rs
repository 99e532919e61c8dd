use std::path::PathBuf;

use thiserror::Error;

use crate::domain::Scenario;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is missing or out of range.
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called with inputs that violate its contract.
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("internal error: {0}")]
    Internal(String),

    /// A sweep result does not cover every cell a matrix layout needs.
    #[error("incomplete grid: {} missing cell(s), first {}", .missing.len(), describe_first(.missing))]
    IncompleteGrid { missing: Vec<(Scenario, String)> },

    #[error("trial failed for scenario {scenario}, design {design}, replicate {replicate}: {source}")]
    Trial {
        scenario: usize,
        design: usize,
        replicate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

fn describe_first(missing: &[(Scenario, String)]) -> String {
    match missing.first() {
        Some((s, what)) => format!("{s} ({what})"),
        None => "none".to_string(),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
