//! The `venuerec` command line: staged pipeline over an artifacts directory.

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod error;
pub mod stages;

pub use cli::main_with;
pub use config::RunConfig;
pub use error::{CliError, CliResult};
