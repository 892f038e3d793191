//! Command-line front end for `furstenberg-core`: argument parsing, input
//! loading, canonical report encoding and atomic output.

pub mod canonical;
pub mod commands;
pub mod error;
pub mod inputs;
pub mod run;

pub use commands::{Cli, Command, Format, OPERATION_COVERAGE, STOCHASTIC_COMMANDS};
pub use error::CliError;
pub use run::{run, Report, VERSION};
