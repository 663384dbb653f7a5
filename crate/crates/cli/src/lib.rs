//! Command-line front end: configuration files, field I/O and the run
//! pipeline behind the `sipo` binary.

pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;

pub use config::Config;
pub use error::{CliError, Result};
