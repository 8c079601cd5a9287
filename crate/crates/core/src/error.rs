use std::path::PathBuf;

use thiserror::Error;

use crate::lp::{LpError, SolveStatus};

#[derive(Debug, Error)]
pub enum Error {
    #[error("{k} unreliable edges exceed the enumeration cap of {cap}")]
    CapExceeded { k: usize, cap: usize },
    #[error("scenario has {found} bits, expected {expected}")]
    BitLength { expected: usize, found: usize },
    #[error("cannot compress an empty sample")]
    EmptySample,
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid scenario set: {0}")]
    InvalidScenarios(String),
    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),
    #[error("infeasible generator parameters: {0}")]
    InfeasibleParams(String),
    #[error("invalid bound query: {0}")]
    InvalidQuery(String),
    #[error("deterministic equivalent needs {columns} columns, above the limit of {limit}")]
    TooLarge { columns: usize, limit: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("recourse program ended {0:?}; y = 0 is always feasible so this is a solver fault")]
    UnexpectedStatus(SolveStatus),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
