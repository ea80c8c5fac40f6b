//! Command-line interface, configuration and the HTTP service.

mod cli;
pub mod config;
pub mod service;

pub use cli::{run, run_from, Category, CliError};
pub use config::AppConfig;
