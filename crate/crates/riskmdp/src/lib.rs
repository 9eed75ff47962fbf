//! File formats and the `riskmdp` command-line tool for `riskmdp-core`.

pub mod cli;
pub mod error;
pub mod io;

pub use error::{CliError, Result};
