//! Command-line runner around `saliency-core`: explainers, insertion
//! curves, sanity checks and runtime benchmarks driven by a JSON config.

pub mod commands;
pub mod config;
pub mod error;
pub mod frames;
pub mod render;
pub mod report;

pub use commands::{run, Command};
pub use config::RunConfig;
pub use error::{BenchError, Result};
