//! Command-line front end for `puffer_core`: CSV ingestion, fits, paths,
//! preconditioner export, inference and the verification harness.

pub mod app;
pub mod config;
pub mod dataset;
pub mod error;

pub use app::{execute, run, Outcome};
pub use config::{Cli, RunConfig};
pub use error::CliError;
