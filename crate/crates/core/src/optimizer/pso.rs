//! Global-best particle swarm optimization with constriction coefficients.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::bounds::Bounds;
use super::candidate::{is_better, Candidate};
use super::de::{IterationRecord, RunResult};
use super::objective::{evaluate_batch, Executor, Objective, Sequential};
use crate::error::{Error, Result};
use crate::rng::{label, RngStream};

const TAG_INIT: u64 = label("pso/init");
const TAG_STEP: u64 = label("pso/step");
const TAG_EVAL: u64 = label("pso/eval");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoConfig {
    pub swarm_size: usize,
    /// ω
    pub inertia: f64,
    /// c1
    pub cognitive: f64,
    /// c2
    pub social: f64,
    /// Velocity cap as a fraction of each dimension's width.
    pub velocity_limit: f64,
    pub max_iterations: usize,
    pub maximize: bool,
    pub seed: u64,
    #[serde(default)]
    pub max_evaluations: Option<u64>,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            swarm_size: 30,
            inertia: 0.729,
            cognitive: 1.494,
            social: 1.494,
            velocity_limit: 0.5,
            max_iterations: 1000,
            maximize: false,
            seed: 0,
            max_evaluations: None,
        }
    }
}

pub fn pso_run<O: Objective + ?Sized>(objective: &O, config: &PsoConfig, bounds: &Bounds) -> Result<RunResult> {
    pso_run_with(objective, config, bounds, &Sequential)
}

pub fn pso_run_with<O: Objective + ?Sized, E: Executor + ?Sized>(
    objective: &O,
    config: &PsoConfig,
    bounds: &Bounds,
    executor: &E,
) -> Result<RunResult> {
    let dim = bounds.dimension();
    if objective.dimension() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: objective.dimension() });
    }
    if config.swarm_size == 0 {
        return Err(Error::config("swarm_size must be positive"));
    }
    let n = config.swarm_size;
    let mut init = RngStream::seeded(config.seed, &[TAG_INIT]);
    let mut positions: Vec<Vec<f64>> = (0..n).map(|_| bounds.sample(&mut init)).collect();
    // Particles start at rest.
    let mut velocities = vec![vec![0.0; dim]; n];
    let vmax: Vec<f64> = (0..dim).map(|j| config.velocity_limit * bounds.width(j)).collect();

    let evaluate = |positions: &[Vec<f64>], iteration: usize| {
        let refs: Vec<&[f64]> = positions.iter().map(Vec::as_slice).collect();
        evaluate_batch(objective, executor, config.seed, [TAG_EVAL, iteration as u64], &refs)
    };

    let mut personal: Vec<Candidate> = positions.iter().cloned().map(Candidate::new).collect();
    for (p, v) in personal.iter_mut().zip(evaluate(&positions, 0)) {
        p.record(v)?;
    }
    let mut evaluations = n as u64;
    let mut global = best_of(&personal, config.maximize).clone();
    let entry = |iteration: usize, evaluations: u64, g: &Candidate| IterationRecord {
        iteration,
        evaluations,
        best_fitness: g.mean_fitness().unwrap_or(f64::NAN),
        mutation_rate: config.inertia,
        crossover_rate: config.social,
        full_space: true,
    };
    let mut history = vec![entry(0, evaluations, &global)];

    let mut iteration = 0;
    while iteration < config.max_iterations {
        if config.max_evaluations.is_some_and(|b| evaluations + n as u64 > b) {
            break;
        }
        let mut rng = RngStream::seeded(config.seed, &[TAG_STEP, iteration as u64]);
        for i in 0..n {
            for j in 0..dim {
                let r1 = rng.next_uniform();
                let r2 = rng.next_uniform();
                let x = positions[i][j];
                let v = config.inertia * velocities[i][j]
                    + config.cognitive * r1 * (personal[i].position[j] - x)
                    + config.social * r2 * (global.position[j] - x);
                let v = v.clamp(-vmax[j], vmax[j]);
                velocities[i][j] = v;
                positions[i][j] = bounds.fold(j, x + v);
            }
        }
        iteration += 1;
        let values = evaluate(&positions, iteration);
        evaluations += n as u64;
        for (i, value) in values.into_iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite(value));
            }
            if is_better(value, personal[i].fitness_unchecked(), config.maximize) {
                let mut c = Candidate::new(positions[i].clone());
                c.record(value)?;
                personal[i] = c;
            }
        }
        let best = best_of(&personal, config.maximize);
        if is_better(best.fitness_unchecked(), global.fitness_unchecked(), config.maximize) {
            global = best.clone();
        }
        history.push(entry(iteration, evaluations, &global));
    }
    Ok(RunResult { best: global, history, evaluations, iterations: iteration, population: personal })
}

fn best_of(candidates: &[Candidate], maximize: bool) -> &Candidate {
    let i = super::candidate::best_index(candidates, maximize).expect("swarm evaluated");
    &candidates[i]
}
