//! File formats, run configuration and commands for the `dsbn` binary.
//!
//! The numerical work lives in [`dsbn_core`]; this crate adds JSON/CSV I/O,
//! layered configuration and the command implementations, which return
//! their results so they can be driven from tests as well as from `main`.

pub mod cli;
pub mod commands;
pub mod config;
mod error;
pub mod formats;

pub use error::{CliError, CliResult};
