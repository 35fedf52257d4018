//! Stochastic hill climbing: one incumbent, Gaussian proposals, strict acceptance.

use alloc::vec;

use serde::{Deserialize, Serialize};

use super::bounds::Bounds;
use super::candidate::{is_better, Candidate};
use super::de::{IterationRecord, RunResult};
use super::objective::Objective;
use crate::error::{Error, Result};
use crate::rng::{label, RngStream};

const TAG_START: u64 = label("hc/start");
const TAG_STEP: u64 = label("hc/step");
const TAG_EVAL: u64 = label("hc/eval");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillClimbConfig {
    /// Proposal standard deviation as a fraction of each dimension's width.
    pub step_size: f64,
    pub max_iterations: usize,
    pub maximize: bool,
    pub seed: u64,
    #[serde(default)]
    pub max_evaluations: Option<u64>,
}

impl Default for HillClimbConfig {
    fn default() -> Self {
        HillClimbConfig { step_size: 0.05, max_iterations: 10_000, maximize: false, seed: 0, max_evaluations: None }
    }
}

pub fn hill_climb_run<O: Objective + ?Sized>(
    objective: &O,
    config: &HillClimbConfig,
    bounds: &Bounds,
) -> Result<RunResult> {
    let dim = bounds.dimension();
    if objective.dimension() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: objective.dimension() });
    }
    if !(config.step_size >= 0.0) {
        return Err(Error::config("step_size must be non-negative"));
    }
    let evaluate = |x: &[f64], iteration: usize| {
        objective.evaluate(x, &mut RngStream::seeded(config.seed, &[TAG_EVAL, iteration as u64]))
    };

    let mut current = Candidate::new(bounds.sample(&mut RngStream::seeded(config.seed, &[TAG_START])));
    current.record(evaluate(&current.position, 0))?;
    let mut evaluations = 1u64;
    let entry = |iteration: usize, evaluations: u64, c: &Candidate| IterationRecord {
        iteration,
        evaluations,
        best_fitness: c.mean_fitness().unwrap_or(f64::NAN),
        mutation_rate: config.step_size,
        crossover_rate: 1.0,
        full_space: true,
    };
    let mut history = vec![entry(0, evaluations, &current)];
    let mut steps = RngStream::seeded(config.seed, &[TAG_STEP]);
    let mut iteration = 0;
    while iteration < config.max_iterations {
        if config.max_evaluations.is_some_and(|b| evaluations + 1 > b) {
            break;
        }
        let mut proposal = current.position.clone();
        for (j, x) in proposal.iter_mut().enumerate() {
            let step = steps.next_gaussian(0.0, config.step_size * bounds.width(j))?;
            *x = bounds.fold(j, *x + step);
        }
        iteration += 1;
        let mut child = Candidate::new(proposal);
        child.record(evaluate(&child.position, iteration))?;
        evaluations += 1;
        if is_better(child.fitness_unchecked(), current.fitness_unchecked(), config.maximize) {
            current = child;
        }
        history.push(entry(iteration, evaluations, &current));
    }
    Ok(RunResult {
        best: current.clone(),
        history,
        evaluations,
        iterations: iteration,
        population: vec![current],
    })
}
