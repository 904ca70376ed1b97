//! Configuration, file formats and subcommands behind the `harvest` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use error::{CliError, Result};
