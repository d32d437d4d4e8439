//! Command-line front end: run configuration, checkpoint files and the
//! subcommands that tie training and analysis together.

pub mod checkpoint;
pub mod commands;
pub mod config;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use commands::{exit_code, run, Cli, Command};
pub use config::{Config, Preset};
