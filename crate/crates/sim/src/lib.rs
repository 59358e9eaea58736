//! Experiment engine for the `coexist-core` scheduler: TOML scenarios, seeded
//! Monte-Carlo sweeps run on a rayon pool, CSV results and the `coexist` CLI.

pub mod cli;
pub mod config;
mod error;
pub mod experiment;
pub mod output;

pub use error::{SimError, SimResult};
