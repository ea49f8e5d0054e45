//! Importance sampling for the tail of the maximum of a heavy-tailed random
//! walk with negative drift.

pub mod approximation;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod models;
pub mod numeric;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod validation;

pub use error::{Error, Result};
