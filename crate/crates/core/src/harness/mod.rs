//! Experiment configuration, seeded runner and table output.

pub mod config;
pub mod presets;
pub mod runner;
pub mod table;

pub use config::{load_spec, ExperimentSpec, Protocol};
pub use runner::{run_experiment, run_experiment_with, Execution};
pub use table::{emit, Format, ResultTable};
