//! Experiment orchestration: flat configuration files, command dispatch,
//! CSV artifacts, and the run manifest.

mod config;
mod run;

pub use config::{keys_help, parse_config, Command, ConfigError, ExperimentConfig, HelixSpec, TargetSpec, KEYS};
pub use run::{
    execute, exit_code_for, resolve_command, run, with_threads, CommandOutput, RunError, RunManifest, RunOptions,
    RunOutcome, CODE_VERSION,
};
