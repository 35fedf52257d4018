//! Experiment drivers: each writes its artifacts into the run directory.

use std::path::{Path, PathBuf};
use std::time::Instant;

use qcontrol_core::gate::{
    gaussian_filter, toffoli, GateObjective, GateProblem, IsingSurrogate, PulseSequence, RobustnessPoint,
};
use qcontrol_core::noisy::nr_de_run_with;
use qcontrol_core::optimizer::benchmarks::{AdditiveNoise, Rastrigin, Rosenbrock, Sphere};
use qcontrol_core::optimizer::{
    de_run_with, hill_climb_run, pso_run_with, Bounds, Executor, FixedIterations, Objective, RunResult,
};
use qcontrol_core::phase::{holevo_variance, policy_bounds, PhaseObjective, PhaseSimConfig, Policy};
use qcontrol_core::rng::{derive_seed, label};
use qcontrol_core::scaling::{
    run_scaling_campaign, Attempt, CampaignFailure, CampaignOutcome, Clock, LedgerSink, NoClock, RegressionFit,
};
use qcontrol_core::sussade::sussade_run_with;
use qcontrol_core::RngStream;

use crate::config::{BenchmarkFunction, ExperimentKind, GateSection, OptimizerSpec, PhaseSection, RunConfig};
use crate::error::{HarnessError, Result};
use crate::exec::RayonExecutor;
use crate::formats::{self, CsvLedger};
use crate::manifest::{Manifest, CONFIG_FILE, MANIFEST_FILE};
use crate::plotdata;

/// Random policies scored per `N` for the baseline.
pub const BASELINE_POLICIES: usize = 9;

/// Runs `spec` on `objective`. The seed fixes every random draw.
pub fn run_optimizer<O, E>(
    spec: &OptimizerSpec,
    objective: &O,
    bounds: &Bounds,
    seed: u64,
    maximize: bool,
    executor: &E,
) -> qcontrol_core::Result<RunResult>
where
    O: Objective + ?Sized,
    E: Executor + ?Sized,
{
    match spec {
        OptimizerSpec::De(s) => de_run_with(objective, &s.to_core(seed, maximize), bounds, executor),
        OptimizerSpec::NrDe(s) => {
            nr_de_run_with(objective, &s.to_core(seed, maximize), bounds, executor, &mut FixedIterations)
        }
        OptimizerSpec::Sussade(s) => {
            sussade_run_with(objective, &s.to_core(seed, maximize), bounds, executor, &mut FixedIterations)
        }
        OptimizerSpec::Pso(s) => pso_run_with(objective, &s.to_core(seed, maximize), bounds, executor),
        OptimizerSpec::HillClimb(s) => hill_climb_run(objective, &s.to_core(seed, maximize), bounds),
    }
}

/// Wall clock for ledgers that ask for timing.
#[derive(Debug)]
pub struct WallClock(Instant);

impl Default for WallClock {
    fn default() -> Self {
        WallClock(Instant::now())
    }
}

impl Clock for WallClock {
    fn seconds(&mut self) -> Option<f64> {
        Some(self.0.elapsed().as_secs_f64())
    }
}

pub fn test_trials(phase: &PhaseSection, n: usize) -> usize {
    phase.test_trials_factor * n * n
}

/// `V_H` of `policy` under the test-time noise and loss.
pub fn test_variance(phase: &PhaseSection, policy: &Policy, stream: &RngStream) -> qcontrol_core::Result<f64> {
    let n = policy.len();
    let cfg = PhaseSimConfig { sigma: phase.sigma, eta: phase.eta, ..PhaseSimConfig::new(n) };
    let s = PhaseObjective::new(cfg)?.sharpness_with_trials(policy, test_trials(phase, n), stream)?;
    holevo_variance(s)
}

/// Median test `V_H` over [`BASELINE_POLICIES`] uniformly random policies.
pub fn random_baseline(phase: &PhaseSection, n: usize, seed: u64) -> qcontrol_core::Result<f64> {
    let mut values = Vec::with_capacity(BASELINE_POLICIES);
    for k in 0..BASELINE_POLICIES as u64 {
        let mut rng = RngStream::seeded(seed, &[label("baseline"), n as u64, k]);
        let policy = Policy::random(n, &mut rng);
        let v = match test_variance(phase, &policy, &rng.child(0)) {
            Err(qcontrol_core::Error::InfiniteVariance) => f64::INFINITY,
            other => other?,
        };
        values.push(v);
    }
    values.sort_by(f64::total_cmp);
    Ok(values[values.len() / 2])
}

/// One optimization at `n`: train on the training setting, score on the test setting.
pub fn phase_attempt<E: Executor + ?Sized>(
    phase: &PhaseSection,
    spec: &OptimizerSpec,
    n: usize,
    seed: u64,
    executor: &E,
) -> qcontrol_core::Result<Attempt> {
    let train = PhaseSimConfig {
        sigma: phase.sigma,
        eta: phase.train_eta,
        trials: phase.train_trials,
        ..PhaseSimConfig::new(n)
    };
    let objective = PhaseObjective::new(train)?;
    let result = run_optimizer(spec, &objective, &policy_bounds(n)?, seed, true, executor)?;
    let policy = Policy::wrapped(&result.best.position)?;
    let v_h = test_variance(phase, &policy, &RngStream::seeded(seed, &[label("test")]))?;
    Ok(Attempt { v_h, policy: policy.deltas().to_vec(), evaluations: result.evaluations })
}

/// Sequential campaign over the configured `N` values.
pub fn phase_campaign<E: Executor + ?Sized>(
    phase: &PhaseSection,
    spec: &OptimizerSpec,
    seed: u64,
    executor: &E,
    clock: &mut dyn Clock,
    sink: &mut dyn LedgerSink,
) -> std::result::Result<CampaignOutcome, CampaignFailure> {
    let campaign = phase.campaign(seed);
    run_scaling_campaign(&campaign, |n, s| phase_attempt(phase, spec, n, s, executor), clock, sink)
}

/// Slope and intercept of the accepted points, when there are at least three.
pub fn ledger_fit(outcome: &CampaignOutcome) -> Option<RegressionFit> {
    outcome.ledger.fit().copied()
}

pub fn gate_objective_for(gate: &GateSection) -> qcontrol_core::Result<GateObjective> {
    let hamiltonian = IsingSurrogate::new(gate.qubits, gate.coupling, gate.detunings.clone())?;
    let target = if gate.qubits == 3 {
        toffoli()
    } else {
        return Err(qcontrol_core::Error::Config("only the three-qubit Toffoli target is built in".into()));
    };
    let problem = GateProblem::new(target, hamiltonian, gate.dt, gate.steps, gate.amplitude_bound)?;
    GateObjective::new(problem, gate.filter_sigma)
}

#[derive(Debug, Clone)]
pub struct GateDesign {
    pub pulses: PulseSequence,
    pub fidelity: f64,
    pub result: RunResult,
}

pub fn design_gate<E: Executor + ?Sized>(
    gate: &GateSection,
    spec: &OptimizerSpec,
    seed: u64,
    executor: &E,
) -> qcontrol_core::Result<GateDesign> {
    let objective = gate_objective_for(gate)?;
    let bounds = objective.problem().bounds()?;
    let result = run_optimizer(spec, &objective, &bounds, seed, true, executor)?;
    let pulses = objective.problem().pulses_from_flat(&result.best.position)?;
    let fidelity = objective.fidelity(&pulses)?;
    Ok(GateDesign { pulses, fidelity, result })
}

/// Options that do not belong in the stored config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Prefix for relative output directories.
    pub output_root: Option<PathBuf>,
    /// Overrides the config's thread count.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub manifest: Manifest,
}

struct Run<'a> {
    cfg: &'a RunConfig,
    dir: PathBuf,
    executor: RayonExecutor,
    artifacts: Vec<String>,
}

impl Run<'_> {
    fn path(&mut self, rel: &str) -> Result<PathBuf> {
        let p = self.dir.join(rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
        }
        if !self.artifacts.iter().any(|a| a == rel) {
            self.artifacts.push(rel.to_string());
        }
        Ok(p)
    }

    fn clock(&self) -> Box<dyn Clock> {
        if self.cfg.record_wall_clock {
            Box::new(WallClock::default())
        } else {
            Box::new(NoClock)
        }
    }

    fn summary(&mut self, rel: &str, rows: Vec<(String, String)>) -> Result<()> {
        let path = self.path(rel)?;
        let rows: Vec<Vec<String>> = rows.into_iter().map(|(k, v)| vec![k, v]).collect();
        formats::write_table(&path, &["key", "value"], &rows)
    }

    /// Ledger, policies, baseline and plot data of one phase campaign under `prefix`.
    fn phase(&mut self, prefix: &str, spec: &OptimizerSpec) -> Result<()> {
        let phase = &self.cfg.phase;
        let ledger_path = self.path(&format!("{prefix}ledger.csv"))?;
        let mut sink = CsvLedger::create(&ledger_path)?;
        let mut clock = self.clock();
        let campaign = phase_campaign(phase, spec, self.cfg.seed, &self.executor, clock.as_mut(), &mut sink);
        let (outcome, failure) = match campaign {
            Ok(o) => (o, None),
            Err(f) => (f.partial.clone(), Some(f)),
        };
        for p in &outcome.policies {
            let path = self.path(&format!("{prefix}policies/policy_N{:03}.txt", p.n))?;
            let meta = [
                ("N", p.n.to_string()),
                ("V_H", p.v_h.to_string()),
                ("seed", p.seed.to_string()),
                ("optimizer", spec.name().to_string()),
                ("attempts", p.attempts.to_string()),
            ];
            formats::write_policy(&path, &p.policy, &meta)?;
        }
        let plot = self.path(&format!("{prefix}ledger.plot.csv"))?;
        plotdata::write_scaling_plot(&plot, &outcome.records)?;
        if let Some(f) = failure {
            return Err(f.into());
        }
        if phase.random_baseline {
            let mut rows = Vec::new();
            for p in &outcome.policies {
                let base = random_baseline(phase, p.n, self.cfg.seed)?;
                rows.push(vec![p.n.to_string(), p.v_h.to_string(), base.to_string()]);
            }
            let path = self.path(&format!("{prefix}baseline.csv"))?;
            formats::write_table(&path, &["N", "V_H", "V_H_random"], &rows)?;
        }
        let mut rows = vec![("optimizer".to_string(), spec.name().to_string())];
        if let Some(fit) = ledger_fit(&outcome) {
            rows.push(("slope".into(), fit.slope.to_string()));
            rows.push(("intercept".into(), fit.intercept.to_string()));
            rows.push(("points".into(), fit.n_points.to_string()));
        }
        rows.push(("attempts".into(), outcome.records.len().to_string()));
        self.summary(&format!("{prefix}summary.csv"), rows)
    }

    fn write_design(&mut self, design: &GateDesign) -> Result<()> {
        let path = self.path("pulses.csv")?;
        formats::write_pulses(&path, &design.pulses)?;
        let filtered = gaussian_filter(&design.pulses, self.cfg.gate.filter_sigma)?;
        let path = self.path("pulses_filtered.csv")?;
        formats::write_pulses(&path, &filtered)?;
        let path = self.path("convergence.csv")?;
        formats::write_convergence(&path, &design.result.history)?;
        Ok(())
    }

    fn gate_design(&mut self) -> Result<GateDesign> {
        let design = design_gate(&self.cfg.gate, &self.cfg.optimizer(), self.cfg.seed, &self.executor)?;
        self.write_design(&design)?;
        let rows = vec![
            ("optimizer".into(), self.cfg.optimizer().name().to_string()),
            ("fidelity".into(), design.fidelity.to_string()),
            ("evaluations".into(), design.result.evaluations.to_string()),
            ("iterations".into(), design.result.iterations.to_string()),
        ];
        self.summary("summary.csv", rows)?;
        Ok(design)
    }

    fn robustness(&mut self) -> Result<Vec<RobustnessPoint>> {
        let pulses = match &self.cfg.robustness.pulses {
            Some(p) => formats::read_pulses(p)?,
            None => self.gate_design()?.pulses,
        };
        let objective = gate_objective_for(&self.cfg.gate)?;
        let r = &self.cfg.robustness;
        let rng = RngStream::seeded(self.cfg.seed, &[label("robustness")]);
        let points = qcontrol_core::gate::robustness_scan(&pulses, &objective, &r.grid, r.trials, &rng)?;
        let path = self.path("robustness.csv")?;
        formats::write_robustness(&path, &points)?;
        let path = self.path("robustness.plot.csv")?;
        plotdata::write_robustness_plot(&path, &points)?;
        Ok(points)
    }

    fn benchmark(&mut self) -> Result<()> {
        let b = self.cfg.benchmark.clone();
        let mut rows = Vec::new();
        for f in &b.functions {
            for spec in &b.optimizers {
                let spec = spec.with_evaluation_budget(b.evaluation_budget);
                for repeat in 0..b.repeats {
                    let seed = derive_seed(self.cfg.seed, &[label(f.name()), label(spec.name()), repeat as u64]);
                    let result = bench_run(*f, b.dimension, b.noise_sigma, &spec, seed, &self.executor)?;
                    let rel = format!("convergence/{}_{}_r{repeat:02}.csv", f.name(), spec.name());
                    let path = self.path(&rel)?;
                    formats::write_convergence(&path, &result.history)?;
                    rows.push(vec![
                        f.name().to_string(),
                        spec.name().to_string(),
                        repeat.to_string(),
                        seed.to_string(),
                        result.best_fitness().to_string(),
                        result.evaluations.to_string(),
                    ]);
                }
            }
        }
        let path = self.path("summary.csv")?;
        formats::write_table(&path, &["function", "optimizer", "repeat", "seed", "best_fitness", "evaluations"], &rows)
    }

    fn compare(&mut self) -> Result<()> {
        let c = self.cfg.compare.clone();
        for spec in &c.optimizers {
            let spec = match c.evaluations_per_n {
                Some(budget) => spec.with_evaluation_budget(budget),
                None => spec.clone(),
            };
            self.phase(&format!("{}/", spec.name()), &spec)?;
        }
        Ok(())
    }
}

/// Minimizes a benchmark function, optionally with additive noise.
pub fn bench_run<E: Executor + ?Sized>(
    function: BenchmarkFunction,
    dimension: usize,
    noise_sigma: f64,
    spec: &OptimizerSpec,
    seed: u64,
    executor: &E,
) -> qcontrol_core::Result<RunResult> {
    fn go<O: Objective, E: Executor + ?Sized>(
        inner: O,
        bounds: Bounds,
        sigma: f64,
        spec: &OptimizerSpec,
        seed: u64,
        executor: &E,
    ) -> qcontrol_core::Result<RunResult> {
        if sigma > 0.0 {
            run_optimizer(spec, &AdditiveNoise { inner, sigma }, &bounds, seed, false, executor)
        } else {
            run_optimizer(spec, &inner, &bounds, seed, false, executor)
        }
    }
    match function {
        BenchmarkFunction::Sphere => {
            let f = Sphere::new(dimension);
            go(f, f.bounds()?, noise_sigma, spec, seed, executor)
        }
        BenchmarkFunction::Rosenbrock => {
            let f = Rosenbrock::new(dimension);
            go(f, f.bounds()?, noise_sigma, spec, seed, executor)
        }
        BenchmarkFunction::Rastrigin => {
            let f = Rastrigin::new(dimension);
            go(f, f.bounds()?, noise_sigma, spec, seed, executor)
        }
    }
}

/// Runs the configured experiment. The config and a manifest are always
/// written, also when the experiment aborts.
pub fn run_experiment(cfg: &RunConfig, options: &RunOptions) -> Result<RunReport> {
    cfg.validate()?;
    let dir = cfg.resolved_output_dir(options.output_root.as_deref());
    std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    let threads = options.threads.unwrap_or(cfg.threads);
    let executor =
        RayonExecutor::new(threads).map_err(|e| HarnessError::Invalid(format!("cannot start thread pool: {e}")))?;

    let config_text = cfg.to_toml();
    let config_path = dir.join(CONFIG_FILE);
    std::fs::write(&config_path, &config_text).map_err(|e| HarnessError::io(&config_path, e))?;
    let mut manifest = Manifest::new(cfg, &config_text, executor.threads());

    let started = Instant::now();
    let mut run = Run { cfg, dir: dir.clone(), executor, artifacts: Vec::new() };
    let outcome = match cfg.experiment {
        ExperimentKind::PhaseScaling => run.phase("", &cfg.optimizer()),
        ExperimentKind::Compare => run.compare(),
        ExperimentKind::GateDesign => run.gate_design().map(|_| ()),
        ExperimentKind::Robustness => run.robustness().map(|_| ()),
        ExperimentKind::Benchmark => run.benchmark(),
    };
    manifest.wall_seconds = started.elapsed().as_secs_f64();
    manifest.artifacts = std::mem::take(&mut run.artifacts);
    match &outcome {
        Ok(()) => manifest.status = "complete".into(),
        Err(e) => {
            manifest.status = "aborted".into();
            manifest.error = Some(e.to_string());
        }
    }
    manifest.write(&dir)?;
    outcome.map(|()| RunReport { output_dir: dir, manifest })
}

/// Directory holding a finished run's config and manifest.
pub fn is_run_dir(dir: &Path) -> bool {
    dir.join(CONFIG_FILE).is_file() && dir.join(MANIFEST_FILE).is_file()
}
