//! Instance files, reports and the command-line driver for `dofsp-core`.

pub mod audit_report;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod instance_file;
pub mod peq;
pub mod report;

pub use error::{CliError, Result};
