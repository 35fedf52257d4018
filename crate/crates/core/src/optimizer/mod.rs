//! Plain optimizers, search spaces and benchmark objectives.

pub mod benchmarks;
mod bounds;
mod candidate;
pub mod de;
pub mod hill_climb;
mod objective;
pub mod pso;

pub use bounds::Bounds;
pub use candidate::{best_index, is_better, Candidate};
pub use de::{
    de_donor, de_init, de_run, de_run_with, de_select, DeConfig, FixedIterations, IterationRecord,
    IterationStatus, RunResult, Sampling, TerminationRule,
};
pub use hill_climb::{hill_climb_run, HillClimbConfig};
pub use objective::{Executor, Objective, Sequential};
pub use pso::{pso_run, pso_run_with, PsoConfig};
