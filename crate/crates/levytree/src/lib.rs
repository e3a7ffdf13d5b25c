//! File formats, verification suites, reports and the command line for
//! `levytree-core`.

pub mod cli;
pub mod error;
pub mod harness;
pub mod io;
pub mod report;

pub use error::{CliError, CliResult};
pub use report::{McConfig, Mode, TestReport};
