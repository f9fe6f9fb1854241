//! File formats, experiment runner and figure presets on top of `casplit-core`.

pub mod analysis;
pub mod config;
pub mod oracle_cmd;
pub mod runner;
pub mod suite;
pub mod trace;

pub use config::{load_scenario, parse_scenario, scenario_to_toml, ConfigError};
pub use runner::{run_experiment, AppError, ExperimentSpec};
