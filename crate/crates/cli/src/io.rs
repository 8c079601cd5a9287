use std::fs;
use std::path::{Path, PathBuf};

use netalloc::network::{validate_network, NetworkSpec, ScenarioSet};
use netalloc::two_stage::Allocation;
use serde::de::DeserializeOwned;

use crate::error::{CliError, CliResult};

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Loads a network file without validating it.
pub fn read_network(path: &Path) -> CliResult<NetworkSpec> {
    read_json(path)
}

pub fn read_allocation(path: &Path) -> CliResult<Allocation> {
    read_json(path)
}

pub fn read_scenarios(path: &Path) -> CliResult<ScenarioSet> {
    let text = read_text(path)?;
    ScenarioSet::from_json(&text).map_err(|e| match e {
        netalloc::Error::Parse(err) => CliError::Parse {
            path: path.to_path_buf(),
            message: err.to_string(),
        },
        other => other.into(),
    })
}

/// `path` relative to `base` unless it is absolute.
pub fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Rejects networks with validation violations, listing all of them.
pub fn check_network(net: &NetworkSpec) -> CliResult<()> {
    let report = validate_network(net);
    if report.is_ok() {
        return Ok(());
    }
    let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
    Err(CliError::domain(format!("invalid network: {}", msgs.join("; "))))
}

pub fn load_valid_network(path: &Path) -> CliResult<NetworkSpec> {
    let net = read_network(path)?;
    check_network(&net)?;
    Ok(net)
}
