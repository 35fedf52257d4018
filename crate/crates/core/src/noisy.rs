//! Differential evolution for noisy objectives.
//!
//! Candidates are compared on the running mean of their fitness samples.
//! Every member of the population receives a fresh sample each generation, so
//! a candidate that keeps surviving accumulates samples: the effective sample
//! size grows by itself as offspring stop winning, which is exactly when noise
//! dominates the differences between candidates.
//!
//! Generation loop:
//! 1. random initial population,
//! 2. `init_samples` samples per candidate,
//! 3. one donor per candidate (rand/1/bin),
//! 4. `child_samples` samples per donor,
//! 5. donor replaces parent iff its mean is strictly better,
//! 6. `per_iteration_samples` more samples for every member,
//! 7. repeat 3-6 until the termination rule fires,
//! 8. `final_samples` more samples for every member, return the best mean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::de::{run_engine, EngineOptions};
use crate::optimizer::{
    Bounds, Candidate, DeConfig, Executor, Objective, RunResult, Sampling, Sequential, TerminationRule,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NrDeConfig {
    pub base: DeConfig,
    pub init_samples: usize,
    pub child_samples: usize,
    pub per_iteration_samples: usize,
    pub final_samples: usize,
}

impl Default for NrDeConfig {
    fn default() -> Self {
        NrDeConfig {
            base: DeConfig { maximize: true, ..DeConfig::default() },
            init_samples: 2,
            child_samples: 2,
            per_iteration_samples: 1,
            final_samples: 10,
        }
    }
}

impl NrDeConfig {
    pub fn sampling(&self) -> Sampling {
        Sampling {
            init: self.init_samples,
            child: self.child_samples,
            refresh: self.per_iteration_samples,
            finish: self.final_samples,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.init_samples == 0
            || self.child_samples == 0
            || self.per_iteration_samples == 0
            || self.final_samples == 0
        {
            return Err(Error::config("all sample counts must be at least 1"));
        }
        Ok(())
    }

    /// Objective evaluations used by a run of `iterations` generations.
    pub fn evaluation_cost(&self, iterations: usize) -> u64 {
        let np = self.base.population_size as u64;
        np * (self.init_samples as u64
            + iterations as u64 * (self.child_samples + self.per_iteration_samples) as u64
            + self.final_samples as u64)
    }
}

/// Folds one sample into the candidate's running mean.
pub fn nr_update_mean(mut candidate: Candidate, sample: f64) -> Result<Candidate> {
    candidate.record(sample)?;
    Ok(candidate)
}

/// Runs the generation loop until `terminator` fires or `base.max_iterations`
/// generations have completed.
pub fn nr_de_run<O: Objective + ?Sized>(
    objective: &O,
    config: &NrDeConfig,
    bounds: &Bounds,
    terminator: &mut dyn TerminationRule,
) -> Result<RunResult> {
    nr_de_run_with(objective, config, bounds, &Sequential, terminator)
}

pub fn nr_de_run_with<O: Objective + ?Sized, E: Executor + ?Sized>(
    objective: &O,
    config: &NrDeConfig,
    bounds: &Bounds,
    executor: &E,
    terminator: &mut dyn TerminationRule,
) -> Result<RunResult> {
    config.validate()?;
    let options = EngineOptions { sampling: config.sampling(), adaptive: None };
    run_engine(objective, &config.base, bounds, &options, executor, terminator)
}
