//! Configuration-driven runner for GME, Redfield and exact-oracle
//! simulations of quadratic fermionic open systems.

pub mod compare;
pub mod config;
pub mod error;
pub mod experiment;

pub use compare::{compare_trajectories, ComparisonRecord};
pub use config::{parse_config, parse_config_str, Overrides, RunMode, SimulationConfig};
pub use error::CliError;
pub use experiment::{resolve_output_dir, run_experiment, ExperimentReport};
