//! Experiment runner for selective mixture characterisation: configuration,
//! library files, subcommands and parameter scans.

pub mod commands;
pub mod config;
pub mod error;
pub mod library_io;
pub mod scan;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use library_io::LibraryFile;
