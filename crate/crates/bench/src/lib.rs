//! Experiment harness for the negative-momentum solvers: JSON
//! configuration, hyperparameter presets, CSV logging, parameter sweeps and
//! property checks of the momentum dynamics.

pub mod checks;
pub mod config;
pub mod error;
pub mod experiment;
pub mod presets;

pub use config::{parse_config, ExperimentConfig};
pub use error::{BenchError, Result};
pub use experiment::{run_experiment, run_many};
