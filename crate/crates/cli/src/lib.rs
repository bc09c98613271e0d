//! Scenario files, built-in examples, and the `design` / `simulate` /
//! `report` commands behind the `etdelay` binary.

pub mod config;
pub mod output;
pub mod run;
pub mod scenarios;

pub use config::{load_config, parse_config, ConfigError, Scenario, ScenarioConfig};
pub use run::{run, CliError, Command, RunOutput};
pub use scenarios::{builtin, BUILTIN_NAMES};
