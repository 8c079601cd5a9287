//! Command-line front end for `netalloc`: file I/O, one subcommand per
//! solver path, and a plan-driven experiment runner that writes CSV.

pub mod commands;
pub mod error;
pub mod experiment;
pub mod io;
pub mod solver;

pub use error::{CliError, CliResult};
