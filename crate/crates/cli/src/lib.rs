//! Command-line front end: job configuration, the subcommand computations
//! and their CSV/JSON outputs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run_job, Outcome};
pub use config::{CommandKind, GridSize, JobConfig};
pub use error::{CliError, Result};
