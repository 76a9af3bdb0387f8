//! The `leaklab` command line: `reproduce`, `simulate` and `sweep`.

pub mod cli;
pub mod error;
pub mod reference;
pub mod reproduce;
pub mod scenario_file;
pub mod sweep;

use std::path::Path;

pub use cli::{run, Cli, Command};
pub use error::{CliError, Result};

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}
