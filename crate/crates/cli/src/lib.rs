//! Configuration, commands and exit-code policy behind the `vfe` binary.

pub mod commands;
pub mod config;
pub mod error;

pub use config::{ConvergeSettings, DtScaling, Generator, RunConfig, VerifySettings};
pub use error::{CliError, CliResult};
