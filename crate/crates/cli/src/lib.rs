//! Command-line front end: reads an analysis config, runs the spectral checks
//! and writes a JSON report with CSV side files.

pub mod commands;
pub mod config;
pub mod error;
pub mod json;

pub use commands::{execute, render_summary, write_outputs, Command, Options, Report, RunOutput};
pub use config::{AnalysisConfig, LoadedConfig};
pub use error::CliError;
