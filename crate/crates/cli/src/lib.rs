//! File formats, report rendering and command implementations behind
//! the `traj` binary. Exposed as a library so integration tests drive
//! the same code paths.

pub mod cli;
pub mod commands;
pub mod formats;
pub mod report;

pub use cli::Cli;
pub use commands::{run, CliError};
