//! Driver for the `fracsource` command: experiment specs, the table runner
//! and the built-in checks.

pub mod app;
pub mod checks;
pub mod config;
pub mod experiment;
pub mod expr;
pub mod spec;

pub use config::Config;
pub use experiment::{format_table, run_experiment, CellResult, ExperimentReport};
pub use spec::{Case, ExperimentSpec, ForwardSpec, Target};
