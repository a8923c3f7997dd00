//! Command-line pipeline: dataset generation, imitation training, demo
//! recording, policy training, evaluation and the exploration comparison.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
