//! Differential evolution (rand/1/bin) and the shared generation loop used by
//! the noise-resistant and self-adaptive variants.


use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::bounds::Bounds;
use super::candidate::{best_index, is_better, Candidate};
use super::objective::{Executor, Objective, Sequential};
use crate::error::{Error, Result};
use crate::rng::{label, RngStream};
use crate::sussade::{adapt_rates, select_subspace_into, SussadeConfig, SussadeState};

const TAG_INIT: u64 = label("de/init");
const TAG_STEP: u64 = label("de/step");
const TAG_EVAL: u64 = label("de/eval");

const PHASE_INIT: u64 = 0;
const PHASE_CHILD: u64 = 1;
const PHASE_REFRESH: u64 = 2;
const PHASE_FINAL: u64 = 3;

/// Parameters shared by every differential evolution variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    pub population_size: usize,
    /// F, the scale applied to the difference vector.
    pub mutation_rate: f64,
    /// C_r, the per-element probability of taking the mutated value.
    pub crossover_rate: f64,
    pub maximize: bool,
    pub max_iterations: usize,
    pub seed: u64,
    /// Optional cap on objective evaluations, checked before each generation.
    #[serde(default)]
    pub max_evaluations: Option<u64>,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            population_size: 30,
            mutation_rate: 0.5,
            crossover_rate: 0.9,
            maximize: false,
            max_iterations: 1000,
            seed: 0,
            max_evaluations: None,
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 {
            return Err(Error::config(alloc::format!(
                "population_size must be at least 4 (got {})",
                self.population_size
            )));
        }
        if !(0.0..=2.0).contains(&self.mutation_rate) {
            return Err(Error::config("mutation_rate must lie in [0, 2]"));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::config("crossover_rate must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Snapshot handed to a [`TerminationRule`] after each generation.
#[derive(Debug)]
pub struct IterationStatus<'a> {
    /// Number of completed generations.
    pub iteration: usize,
    pub evaluations: u64,
    pub population: &'a [Candidate],
    pub best: &'a Candidate,
    pub maximize: bool,
}

/// Decides when the generation loop ends (on top of the hard iteration cap).
pub trait TerminationRule {
    fn should_stop(&mut self, status: &IterationStatus<'_>) -> bool;
}

/// Stop after the configured `max_iterations`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FixedIterations;

impl TerminationRule for FixedIterations {
    fn should_stop(&mut self, _status: &IterationStatus<'_>) -> bool {
        false
    }
}

impl<F: FnMut(&IterationStatus<'_>) -> bool> TerminationRule for F {
    fn should_stop(&mut self, status: &IterationStatus<'_>) -> bool {
        self(status)
    }
}

/// Per-generation trace entry. Entry 0 describes the initial population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub evaluations: u64,
    /// Best fitness in the population (best-so-far for elitist deterministic runs).
    pub best_fitness: f64,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub full_space: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub best: Candidate,
    pub history: Vec<IterationRecord>,
    pub evaluations: u64,
    pub iterations: usize,
    pub population: Vec<Candidate>,
}

impl RunResult {
    pub fn best_fitness(&self) -> f64 {
        self.best.fitness_unchecked()
    }

    pub fn fitness_history(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.best_fitness).collect()
    }
}

/// A uniformly random population, no samples yet.
pub fn de_init(config: &DeConfig, bounds: &Bounds, rng: &mut RngStream) -> Result<Vec<Candidate>> {
    config.validate()?;
    Ok((0..config.population_size).map(|_| Candidate::new(bounds.sample(rng))).collect())
}

/// Mutation plus binomial crossover for one target.
///
/// `active` restricts crossover to a coordinate subset; coordinates outside it
/// copy the target. When `crossover_rate > 0` one random active coordinate is
/// always mutated.
#[allow(clippy::too_many_arguments)]
pub(crate) fn donor_into(
    target: &[f64],
    base: &[f64],
    plus: &[f64],
    minus: &[f64],
    mutation_rate: f64,
    crossover_rate: f64,
    active: Option<&[usize]>,
    rng: &mut RngStream,
    bounds: &Bounds,
    out: &mut Vec<f64>,
) {
    out.clear();
    out.extend_from_slice(target);
    let dim = target.len();
    let active_len = active.map_or(dim, <[usize]>::len);
    if active_len == 0 {
        return;
    }
    let forced = if crossover_rate > 0.0 {
        let k = rng.next_index(active_len);
        Some(active.map_or(k, |a| a[k]))
    } else {
        None
    };
    let mut mutate = |j: usize, rng: &mut RngStream| {
        let r = rng.next_uniform();
        if r <= crossover_rate || Some(j) == forced {
            out[j] = bounds.fold(j, base[j] + mutation_rate * (plus[j] - minus[j]));
        }
    };
    match active {
        Some(indices) => indices.iter().for_each(|&j| mutate(j, rng)),
        None => (0..dim).for_each(|j| mutate(j, rng)),
    }
}

/// Donor for `target` from three other candidates' positions.
pub fn de_donor(
    target: &[f64],
    others: [&[f64]; 3],
    mutation_rate: f64,
    crossover_rate: f64,
    rng: &mut RngStream,
    bounds: &Bounds,
) -> Result<Vec<f64>> {
    let dim = bounds.dimension();
    for v in core::iter::once(target).chain(others) {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
    }
    let [a, b, c] = others;
    if a == b || a == c || b == c || a == target || b == target || c == target {
        return Err(Error::Contract("donor parents must be distinct from each other and the target"));
    }
    let mut out = Vec::with_capacity(dim);
    donor_into(target, a, b, c, mutation_rate, crossover_rate, None, rng, bounds, &mut out);
    Ok(out)
}

/// Selection: the child replaces the parent only when strictly better.
pub fn de_select(parent: Candidate, child: Candidate, maximize: bool) -> Result<Candidate> {
    match (parent.mean_fitness(), child.mean_fitness()) {
        (Some(p), Some(c)) => Ok(if is_better(c, p, maximize) { child } else { parent }),
        _ => Err(Error::Contract("selection requires evaluated candidates")),
    }
}

/// Plain differential evolution on a deterministic objective.
pub fn de_run<O: Objective + ?Sized>(objective: &O, config: &DeConfig, bounds: &Bounds) -> Result<RunResult> {
    de_run_with(objective, config, bounds, &Sequential)
}

pub fn de_run_with<O: Objective + ?Sized, E: Executor + ?Sized>(
    objective: &O,
    config: &DeConfig,
    bounds: &Bounds,
    executor: &E,
) -> Result<RunResult> {
    let options = EngineOptions { sampling: Sampling::SINGLE, adaptive: None };
    run_engine(objective, config, bounds, &options, executor, &mut FixedIterations)
}

/// How many fitness samples each phase of a generation draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sampling {
    pub init: usize,
    pub child: usize,
    pub refresh: usize,
    pub finish: usize,
}

impl Sampling {
    pub const SINGLE: Sampling = Sampling { init: 1, child: 1, refresh: 0, finish: 0 };

    fn validate(&self) -> Result<()> {
        if self.init == 0 || self.child == 0 {
            return Err(Error::config("initial and child sample counts must be at least 1"));
        }
        Ok(())
    }
}

pub(crate) struct EngineOptions<'a> {
    pub sampling: Sampling,
    pub adaptive: Option<&'a SussadeConfig>,
}

struct Evaluator<'a, O: ?Sized, E: ?Sized> {
    objective: &'a O,
    executor: &'a E,
    seed: u64,
    evaluations: u64,
}

impl<O: Objective + ?Sized, E: Executor + ?Sized> Evaluator<'_, O, E> {
    /// Draws `samples` fitness samples for each listed candidate, in parallel,
    /// and folds them in job order.
    fn sample(
        &mut self,
        phase: u64,
        iteration: usize,
        population: &mut [Candidate],
        members: &[usize],
        samples: usize,
    ) -> Result<()> {
        if samples == 0 || members.is_empty() {
            return Ok(());
        }
        let pop: &[Candidate] = population;
        let (objective, seed) = (self.objective, self.seed);
        let values = self.executor.map(members.len() * samples, &|job| {
            let (m, s) = (job / samples, job % samples);
            let i = members[m];
            let mut rng =
                RngStream::seeded(seed, &[TAG_EVAL, phase, iteration as u64, i as u64, s as u64]);
            objective.evaluate(&pop[i].position, &mut rng)
        });
        self.evaluations += values.len() as u64;
        for (job, v) in values.into_iter().enumerate() {
            population[members[job / samples]].record(v)?;
        }
        Ok(())
    }
}

pub(crate) fn run_engine<O, E>(
    objective: &O,
    config: &DeConfig,
    bounds: &Bounds,
    options: &EngineOptions<'_>,
    executor: &E,
    terminator: &mut dyn TerminationRule,
) -> Result<RunResult>
where
    O: Objective + ?Sized,
    E: Executor + ?Sized,
{
    config.validate()?;
    options.sampling.validate()?;
    let dim = bounds.dimension();
    if objective.dimension() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: objective.dimension() });
    }
    let np = config.population_size;
    let sampling = options.sampling;
    let mut state = match options.adaptive {
        Some(sc) => {
            sc.validate(dim)?;
            SussadeState::new(config.mutation_rate, config.crossover_rate, sc)?
        }
        None => SussadeState::fixed(config.mutation_rate, config.crossover_rate),
    };

    let mut eval = Evaluator { objective, executor, seed: config.seed, evaluations: 0 };
    let everyone: Vec<usize> = (0..np).collect();

    let mut population = de_init(config, bounds, &mut RngStream::seeded(config.seed, &[TAG_INIT]))?;
    eval.sample(PHASE_INIT, 0, &mut population, &everyone, sampling.init)?;

    let mut history = Vec::new();
    let record = |iteration: usize, evaluations: u64, pop: &[Candidate], st: &SussadeState, full: bool| {
        let b = best_index(pop, config.maximize).expect("population evaluated");
        IterationRecord {
            iteration,
            evaluations,
            best_fitness: pop[b].fitness_unchecked(),
            mutation_rate: st.mutation_rate,
            crossover_rate: st.crossover_rate,
            full_space: full,
        }
    };
    history.push(record(0, eval.evaluations, &population, &state, true));

    let per_iteration = (np * (sampling.child + sampling.refresh)) as u64;
    let finish_cost = (np * sampling.finish) as u64;
    let mut children: Vec<Candidate> = population.clone();
    let mut active: Vec<usize> = Vec::with_capacity(dim);
    let mut scratch = Vec::with_capacity(dim);
    let mut iteration = 0;

    while iteration < config.max_iterations {
        if let Some(budget) = config.max_evaluations {
            if eval.evaluations + per_iteration + finish_cost > budget {
                break;
            }
        }
        let mut rng = RngStream::seeded(config.seed, &[TAG_STEP, iteration as u64]);
        let full_space = match options.adaptive {
            Some(sc) => {
                state = adapt_rates(&state, sc, &mut rng);
                select_subspace_into(dim, sc, &mut rng, &mut active)
            }
            None => true,
        };
        let active_set = if full_space { None } else { Some(active.as_slice()) };

        // Donors
        for i in 0..np {
            let (a, b, c) = pick_three(i, np, &mut rng);
            donor_into(
                &population[i].position,
                &population[a].position,
                &population[b].position,
                &population[c].position,
                state.mutation_rate,
                state.crossover_rate,
                active_set,
                &mut rng,
                bounds,
                &mut scratch,
            );
            children[i] = Candidate::new(core::mem::take(&mut scratch));
            scratch = Vec::with_capacity(dim);
        }
        // Sample children
        eval.sample(PHASE_CHILD, iteration, &mut children, &everyone, sampling.child)?;
        // Selection
        for (parent, child) in population.iter_mut().zip(children.iter_mut()) {
            if is_better(child.fitness_unchecked(), parent.fitness_unchecked(), config.maximize) {
                core::mem::swap(parent, child);
            }
        }
        // Resample the population
        eval.sample(PHASE_REFRESH, iteration, &mut population, &everyone, sampling.refresh)?;
        iteration += 1;

        history.push(record(iteration, eval.evaluations, &population, &state, full_space));
        let b = best_index(&population, config.maximize).expect("population evaluated");
        let status = IterationStatus {
            iteration,
            evaluations: eval.evaluations,
            population: &population,
            best: &population[b],
            maximize: config.maximize,
        };
        if terminator.should_stop(&status) {
            break;
        }
    }

    // Final resampling
    eval.sample(PHASE_FINAL, iteration, &mut population, &everyone, sampling.finish)?;
    let b = best_index(&population, config.maximize).expect("population evaluated");
    Ok(RunResult {
        best: population[b].clone(),
        history,
        evaluations: eval.evaluations,
        iterations: iteration,
        population,
    })
}

/// Three mutually distinct indices, all different from `i`.
fn pick_three(i: usize, np: usize, rng: &mut RngStream) -> (usize, usize, usize) {
    let mut draw = |exclude: [usize; 3]| loop {
        let k = rng.next_index(np);
        if !exclude.contains(&k) {
            break k;
        }
    };
    let a = draw([i, i, i]);
    let b = draw([i, a, a]);
    let c = draw([i, a, b]);
    (a, b, c)
}
