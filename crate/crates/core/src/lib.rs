//! Two-stage stochastic resource allocation on networks with unreliable
//! edges: network model, an in-house LP solver, exact and sample-average
//! optimizers, and sample-size bounds.

pub mod bounds;
mod error;
pub mod lp;
pub mod network;
pub mod rng;
pub mod saa;
pub mod two_stage;

pub use error::{Error, Result};
