//! Batch front end: scenario parsing, command dispatch and table output.

pub mod commands;
pub mod format;
pub mod scenario;

pub use commands::{run_command, write_status, CliError, Command, Sink};
pub use scenario::{parse_scenario, validate_scenario, Format, Scenario};
