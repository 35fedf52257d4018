//! Experiment harness for `qcontrol-core`: TOML run configs, a rayon-backed
//! evaluation executor, CSV artifacts and run manifests.

pub mod config;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod formats;
pub mod manifest;
pub mod plotdata;

pub use config::{parse_config, parse_config_str, ExperimentKind, OptimizerSpec, RunConfig};
pub use error::{HarnessError, Result};
pub use exec::RayonExecutor;
pub use experiments::{run_experiment, RunOptions, RunReport};
