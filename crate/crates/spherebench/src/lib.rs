//! Benchmark harness for the sphere samplers: experiment configuration,
//! scripted reproductions (one-step marginal comparison, projected-chain
//! Markovianity probabilities, the level-set benchmark and its dimension
//! sweep), result persistence and CSV plot data.

pub mod config;
pub mod error;
pub mod experiments;
pub mod plots;
pub mod report;

pub use error::{HarnessError, Result};
