//! Subspace-selective self-adaptive differential evolution (SuSSADE).
//!
//! Each generation first re-draws the mutation and crossover rates with small
//! probability, then either searches the full space or freezes all but a
//! random subset of coordinates.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::de::{run_engine, EngineOptions};
use crate::optimizer::{Bounds, DeConfig, Executor, FixedIterations, Objective, RunResult, Sampling, Sequential, TerminationRule};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SussadeConfig {
    pub base: DeConfig,
    /// F_l, the smallest mutation rate a re-draw can produce.
    pub f_lower: f64,
    /// F_u, the width of the mutation-rate re-draw interval.
    pub f_upper: f64,
    /// κ1, probability of re-drawing F in a generation.
    pub kappa_mutation: f64,
    /// κ2, probability of re-drawing C_r in a generation.
    pub kappa_crossover: f64,
    /// 𝒮, probability that a generation searches the full space.
    pub switching_rate: f64,
    /// Coordinates searched in a subspace generation; `None` means a third of the dimension.
    #[serde(default)]
    pub subspace_size: Option<usize>,
    /// Fitness sampling schedule; the default suits deterministic objectives.
    #[serde(default = "single_sampling")]
    pub sampling: Sampling,
}

fn single_sampling() -> Sampling {
    Sampling::SINGLE
}

impl Default for SussadeConfig {
    fn default() -> Self {
        SussadeConfig {
            base: DeConfig::default(),
            f_lower: 0.1,
            f_upper: 0.9,
            kappa_mutation: 0.1,
            kappa_crossover: 0.1,
            switching_rate: 0.3,
            subspace_size: None,
            sampling: Sampling::SINGLE,
        }
    }
}

impl SussadeConfig {
    pub fn subspace_len(&self, dimension: usize) -> usize {
        self.subspace_size.unwrap_or((dimension / 3).max(1))
    }

    pub fn validate(&self, dimension: usize) -> Result<()> {
        if !(self.f_lower > 0.0 && self.f_upper > 0.0) {
            return Err(Error::config("f_lower and f_upper must be positive"));
        }
        let unit = 0.0..=1.0;
        if !unit.contains(&self.kappa_mutation) || !unit.contains(&self.kappa_crossover) {
            return Err(Error::config("adaptation rates must lie in [0, 1]"));
        }
        if !unit.contains(&self.switching_rate) {
            return Err(Error::config("switching_rate must lie in [0, 1]"));
        }
        let k = self.subspace_len(dimension);
        if self.switching_rate < 1.0 && (k == 0 || k >= dimension) {
            return Err(Error::config(alloc::format!(
                "subspace_size must lie in 1..{dimension} (got {k})"
            )));
        }
        Ok(())
    }
}

/// The rates in force for the current generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SussadeState {
    /// F_G
    pub mutation_rate: f64,
    /// C_r,G
    pub crossover_rate: f64,
    pub iteration: usize,
}

impl SussadeState {
    pub fn new(mutation_rate: f64, crossover_rate: f64, config: &SussadeConfig) -> Result<Self> {
        let f_max = config.f_lower + config.f_upper;
        if !(config.f_lower..=f_max).contains(&mutation_rate) {
            return Err(Error::config(alloc::format!(
                "initial mutation_rate must lie in [{}, {}]",
                config.f_lower,
                f_max
            )));
        }
        if !(crossover_rate > 0.0 && crossover_rate <= 1.0) {
            return Err(Error::config("initial crossover_rate must lie in (0, 1]"));
        }
        Ok(SussadeState { mutation_rate, crossover_rate, iteration: 0 })
    }

    pub(crate) fn fixed(mutation_rate: f64, crossover_rate: f64) -> Self {
        SussadeState { mutation_rate, crossover_rate, iteration: 0 }
    }
}

/// Rate update from explicit draws `r = [r1, r2, r3, r4]`, each in (0, 1].
pub fn adapt_rates_from(state: &SussadeState, config: &SussadeConfig, r: [f64; 4]) -> SussadeState {
    let mutation_rate = if r[1] < config.kappa_mutation {
        config.f_lower + r[0] * config.f_upper
    } else {
        state.mutation_rate
    };
    let crossover_rate = if r[3] < config.kappa_crossover { r[2] } else { state.crossover_rate };
    SussadeState { mutation_rate, crossover_rate, iteration: state.iteration + 1 }
}

pub fn adapt_rates(state: &SussadeState, config: &SussadeConfig, rng: &mut RngStream) -> SussadeState {
    let r = [rng.next_uniform(), rng.next_uniform(), rng.next_uniform(), rng.next_uniform()];
    adapt_rates_from(state, config, r)
}

/// Fills `active` with the coordinates searched this generation (ascending)
/// and returns whether that is the full space.
pub(crate) fn select_subspace_into(
    dimension: usize,
    config: &SussadeConfig,
    rng: &mut RngStream,
    active: &mut Vec<usize>,
) -> bool {
    active.clear();
    active.extend(0..dimension);
    let r = 1.0 - rng.next_uniform();
    if r < config.switching_rate {
        return true;
    }
    let k = config.subspace_len(dimension).min(dimension);
    for i in 0..k {
        let j = i + rng.next_index(dimension - i);
        active.swap(i, j);
    }
    active.truncate(k);
    active.sort_unstable();
    false
}

/// Coordinates searched this generation: everything with probability 𝒮,
/// otherwise a uniform random subset of `subspace_size` coordinates.
pub fn select_subspace(dimension: usize, config: &SussadeConfig, rng: &mut RngStream) -> Vec<usize> {
    let mut active = Vec::with_capacity(dimension);
    select_subspace_into(dimension, config, rng, &mut active);
    active
}

pub fn sussade_run<O: Objective + ?Sized>(objective: &O, config: &SussadeConfig, bounds: &Bounds) -> Result<RunResult> {
    sussade_run_with(objective, config, bounds, &Sequential, &mut FixedIterations)
}

pub fn sussade_run_with<O: Objective + ?Sized, E: Executor + ?Sized>(
    objective: &O,
    config: &SussadeConfig,
    bounds: &Bounds,
    executor: &E,
    terminator: &mut dyn TerminationRule,
) -> Result<RunResult> {
    let options = EngineOptions { sampling: config.sampling, adaptive: Some(config) };
    run_engine(objective, &config.base, bounds, &options, executor, terminator)
}
