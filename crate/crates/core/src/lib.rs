//! Information-theoretic measurement: entropy, divergences, mutual and
//! conditional mutual information, transfer entropy, effective information,
//! integrated information and autonomy, with surrogate tests, bootstrap
//! intervals and a reporting manifest for every result.
//!
//! All values are in nats unless a function says otherwise; the causal
//! structure measures report bits.

pub mod advisor;
pub mod causal;
pub mod data;
pub mod divergence;
pub mod entropy;
pub mod error;
pub mod inference;
pub mod knn;
pub mod manifest;
pub mod mi;
pub mod report;
pub mod rng;
pub mod simulate;
pub mod temporal;

pub use error::{Error, Result};
pub use rng::RngSeed;
