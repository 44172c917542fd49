//! Sweeps over geometry and spectrum with Monte-Carlo averaging, written as
//! CSV.

pub mod config;
pub mod presets;
pub mod runner;

pub use config::{ExperimentConfig, SolverKind, Sweep, SweepAxis};
pub use presets::{preset, preset_names, preset_scaled, presets, Scale};
pub use runner::{build_instance, expand, run_experiment, run_oracle, Instance, OracleRow, ResultRow, ResultTable, RunOptions};
