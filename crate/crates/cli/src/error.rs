use std::path::PathBuf;

use thiserror::Error;

/// Failures reported by the command-line front end. Each maps to one exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Input is well-formed but violates a domain rule (invalid network,
    /// infeasible parameters, enumeration cap exceeded, ...).
    #[error("{0}")]
    Domain(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Io { .. } | CliError::Parse { .. } => 2,
            CliError::Solver(_) => 3,
        }
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        CliError::Domain(msg.into())
    }
}

impl From<netalloc::Error> for CliError {
    fn from(e: netalloc::Error) -> Self {
        use netalloc::Error as E;
        match e {
            E::Io { path, source } => CliError::Io { path, source },
            E::Parse(err) => CliError::Parse {
                path: PathBuf::new(),
                message: err.to_string(),
            },
            E::Lp(_) | E::UnexpectedStatus(_) => CliError::Solver(e.to_string()),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io {
            path: PathBuf::new(),
            source: std::io::Error::other(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
