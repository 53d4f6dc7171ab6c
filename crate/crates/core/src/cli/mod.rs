//! Command-line front end: configuration, subcommands and output files.

pub mod checks;
pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, ConfigError, ConfigErrors, RunConfig};
pub use output::Format;
pub use run::Command;
