//! Run configuration, read from a single TOML file.
//!
//! Every table rejects unknown keys. Missing keys take the defaults of the
//! corresponding `Default` impl, so a minimal file only names the experiment
//! and the seed.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qcontrol_core::gate::{DEFAULT_AMPLITUDE_BOUND, DEFAULT_COUPLING, DEFAULT_DETUNINGS, DEFAULT_STEPS};
use qcontrol_core::noisy::NrDeConfig;
use qcontrol_core::optimizer::{DeConfig, HillClimbConfig, PsoConfig};
use qcontrol_core::scaling::{CampaignConfig, DEFAULT_CONFIDENCE, DEFAULT_RETRY_CAP};
use qcontrol_core::sussade::SussadeConfig;

use crate::error::{HarnessError, Result};

/// SuSSADE defaults for gate design.
pub const GATE_POPULATION: usize = 15;
pub const GATE_EVALUATIONS: u64 = 100_000;

pub const SCHEMA_VERSION: u32 = 1;

/// Iteration cap used when an evaluation budget governs the run. Kept within
/// the TOML integer range.
pub const UNBOUNDED_ITERATIONS: usize = i64::MAX as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PhaseScaling,
    GateDesign,
    Benchmark,
    Robustness,
    Compare,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::PhaseScaling => "phase-scaling",
            ExperimentKind::GateDesign => "gate-design",
            ExperimentKind::Benchmark => "benchmark",
            ExperimentKind::Robustness => "robustness",
            ExperimentKind::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub seed: u64,
    /// Relative paths resolve against `QCONTROL_OUTPUT_ROOT` when it is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Worker threads for evaluation waves; 0 uses every core.
    #[serde(default)]
    pub threads: usize,
    /// Fill the ledger's wall_seconds column. Off by default so metric files
    /// stay byte-identical across reruns.
    #[serde(default)]
    pub record_wall_clock: bool,
    /// Optimizer for single-optimizer experiments; each experiment has its own default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerSpec>,
    #[serde(default)]
    pub phase: PhaseSection,
    #[serde(default)]
    pub gate: GateSection,
    #[serde(default)]
    pub robustness: RobustnessSection,
    #[serde(default)]
    pub benchmark: BenchmarkSection,
    #[serde(default)]
    pub compare: CompareSection,
}

/// Optimizer selection. Seeds and the optimization direction come from the
/// experiment, not from this table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OptimizerSpec {
    De(DeSection),
    NrDe(NrDeSection),
    Sussade(SussadeSection),
    Pso(PsoSection),
    HillClimb(HillClimbSection),
}

impl OptimizerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerSpec::De(_) => "de",
            OptimizerSpec::NrDe(_) => "nr-de",
            OptimizerSpec::Sussade(_) => "sussade",
            OptimizerSpec::Pso(_) => "pso",
            OptimizerSpec::HillClimb(_) => "hill-climb",
        }
    }

    /// Replaces the iteration cap by an evaluation budget.
    pub fn with_evaluation_budget(&self, budget: u64) -> Self {
        let mut spec = self.clone();
        let (iters, evals) = match &mut spec {
            OptimizerSpec::De(s) => (&mut s.max_iterations, &mut s.max_evaluations),
            OptimizerSpec::NrDe(s) => (&mut s.max_iterations, &mut s.max_evaluations),
            OptimizerSpec::Sussade(s) => (&mut s.max_iterations, &mut s.max_evaluations),
            OptimizerSpec::Pso(s) => (&mut s.max_iterations, &mut s.max_evaluations),
            OptimizerSpec::HillClimb(s) => (&mut s.max_iterations, &mut s.max_evaluations),
        };
        *iters = UNBOUNDED_ITERATIONS;
        *evals = Some(budget);
        spec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeSection {
    pub population_size: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub max_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_evaluations: Option<u64>,
}

impl Default for DeSection {
    fn default() -> Self {
        let d = DeConfig::default();
        DeSection {
            population_size: d.population_size,
            mutation_rate: d.mutation_rate,
            crossover_rate: d.crossover_rate,
            max_iterations: d.max_iterations,
            max_evaluations: None,
        }
    }
}

impl DeSection {
    pub fn to_core(&self, seed: u64, maximize: bool) -> DeConfig {
        DeConfig {
            population_size: self.population_size,
            mutation_rate: self.mutation_rate,
            crossover_rate: self.crossover_rate,
            maximize,
            max_iterations: self.max_iterations,
            seed,
            max_evaluations: self.max_evaluations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NrDeSection {
    pub population_size: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub max_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_evaluations: Option<u64>,
    pub init_samples: usize,
    pub child_samples: usize,
    pub per_iteration_samples: usize,
    pub final_samples: usize,
}

impl Default for NrDeSection {
    fn default() -> Self {
        let d = NrDeConfig::default();
        let de = DeSection::default();
        NrDeSection {
            population_size: de.population_size,
            mutation_rate: 0.4,
            crossover_rate: de.crossover_rate,
            max_iterations: 500,
            max_evaluations: None,
            init_samples: d.init_samples,
            child_samples: d.child_samples,
            per_iteration_samples: d.per_iteration_samples,
            final_samples: d.final_samples,
        }
    }
}

impl NrDeSection {
    pub fn de(&self) -> DeSection {
        DeSection {
            population_size: self.population_size,
            mutation_rate: self.mutation_rate,
            crossover_rate: self.crossover_rate,
            max_iterations: self.max_iterations,
            max_evaluations: self.max_evaluations,
        }
    }

    pub fn to_core(&self, seed: u64, maximize: bool) -> NrDeConfig {
        NrDeConfig {
            base: self.de().to_core(seed, maximize),
            init_samples: self.init_samples,
            child_samples: self.child_samples,
            per_iteration_samples: self.per_iteration_samples,
            final_samples: self.final_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SussadeSection {
    pub population_size: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub max_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_evaluations: Option<u64>,
    pub f_lower: f64,
    pub f_upper: f64,
    pub kappa_mutation: f64,
    pub kappa_crossover: f64,
    pub switching_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subspace_size: Option<usize>,
}

impl Default for SussadeSection {
    fn default() -> Self {
        let d = SussadeConfig::default();
        let de = DeSection::default();
        SussadeSection {
            population_size: de.population_size,
            mutation_rate: de.mutation_rate,
            crossover_rate: de.crossover_rate,
            max_iterations: de.max_iterations,
            max_evaluations: None,
            f_lower: d.f_lower,
            f_upper: d.f_upper,
            kappa_mutation: d.kappa_mutation,
            kappa_crossover: d.kappa_crossover,
            switching_rate: d.switching_rate,
            subspace_size: d.subspace_size,
        }
    }
}

impl SussadeSection {
    pub fn de(&self) -> DeSection {
        DeSection {
            population_size: self.population_size,
            mutation_rate: self.mutation_rate,
            crossover_rate: self.crossover_rate,
            max_iterations: self.max_iterations,
            max_evaluations: self.max_evaluations,
        }
    }

    pub fn to_core(&self, seed: u64, maximize: bool) -> SussadeConfig {
        SussadeConfig {
            base: self.de().to_core(seed, maximize),
            f_lower: self.f_lower,
            f_upper: self.f_upper,
            kappa_mutation: self.kappa_mutation,
            kappa_crossover: self.kappa_crossover,
            switching_rate: self.switching_rate,
            subspace_size: self.subspace_size,
            ..SussadeConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoSection {
    pub swarm_size: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub velocity_limit: f64,
    pub max_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_evaluations: Option<u64>,
}

impl Default for PsoSection {
    fn default() -> Self {
        let d = PsoConfig::default();
        PsoSection {
            swarm_size: d.swarm_size,
            inertia: d.inertia,
            cognitive: d.cognitive,
            social: d.social,
            velocity_limit: d.velocity_limit,
            max_iterations: d.max_iterations,
            max_evaluations: None,
        }
    }
}

impl PsoSection {
    pub fn to_core(&self, seed: u64, maximize: bool) -> PsoConfig {
        PsoConfig {
            swarm_size: self.swarm_size,
            inertia: self.inertia,
            cognitive: self.cognitive,
            social: self.social,
            velocity_limit: self.velocity_limit,
            max_iterations: self.max_iterations,
            maximize,
            seed,
            max_evaluations: self.max_evaluations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HillClimbSection {
    pub step_size: f64,
    pub max_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_evaluations: Option<u64>,
}

impl Default for HillClimbSection {
    fn default() -> Self {
        let d = HillClimbConfig::default();
        HillClimbSection { step_size: d.step_size, max_iterations: d.max_iterations, max_evaluations: None }
    }
}

impl HillClimbSection {
    pub fn to_core(&self, seed: u64, maximize: bool) -> HillClimbConfig {
        HillClimbConfig {
            step_size: self.step_size,
            max_iterations: self.max_iterations,
            maximize,
            seed,
            max_evaluations: self.max_evaluations,
        }
    }
}

/// Phase-estimation campaign settings, shared by `phase-scaling` and `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSection {
    pub n_values: Vec<usize>,
    /// Phase noise used both in training and in testing.
    pub sigma: f64,
    /// Loss probability at test time.
    pub eta: f64,
    /// Loss probability during optimization.
    pub train_eta: f64,
    /// Trajectories per training sample; `None` means `10 N²`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_trials: Option<usize>,
    /// Test trajectories are `test_trials_factor · N²`.
    pub test_trials_factor: usize,
    /// First `N` checked by accept-reject; absent means fixed iterations throughout.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub switch_over: Option<usize>,
    pub retry_cap: usize,
    pub confidence: f64,
    /// Also score one uniformly random policy per `N`.
    pub random_baseline: bool,
}

impl Default for PhaseSection {
    fn default() -> Self {
        PhaseSection {
            n_values: (4..=20).collect(),
            sigma: 0.0,
            eta: 0.0,
            train_eta: 0.0,
            train_trials: None,
            test_trials_factor: 100,
            switch_over: None,
            retry_cap: DEFAULT_RETRY_CAP,
            confidence: DEFAULT_CONFIDENCE,
            random_baseline: true,
        }
    }
}

impl PhaseSection {
    pub fn campaign(&self, seed: u64) -> CampaignConfig {
        CampaignConfig {
            n_values: self.n_values.clone(),
            switch_over: self.switch_over,
            retry_cap: self.retry_cap,
            confidence: self.confidence,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateSection {
    pub qubits: usize,
    pub coupling: f64,
    pub detunings: Vec<f64>,
    pub steps: usize,
    pub dt: f64,
    pub amplitude_bound: f64,
    /// Gaussian filter width in time units; 0 disables filtering.
    pub filter_sigma: f64,
}

impl Default for GateSection {
    fn default() -> Self {
        GateSection {
            qubits: 3,
            coupling: DEFAULT_COUPLING,
            detunings: DEFAULT_DETUNINGS.to_vec(),
            steps: DEFAULT_STEPS,
            dt: 1.0,
            amplitude_bound: DEFAULT_AMPLITUDE_BOUND,
            filter_sigma: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessSection {
    /// Pulse file to scan; when absent the pulses are designed first.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pulses: Option<PathBuf>,
    pub grid: Vec<f64>,
    pub trials: usize,
}

impl Default for RobustnessSection {
    fn default() -> Self {
        RobustnessSection {
            pulses: None,
            grid: (0..=10).map(|k| k as f64 * 0.01 * PI).collect(),
            trials: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchmarkFunction {
    Sphere,
    Rosenbrock,
    Rastrigin,
}

impl BenchmarkFunction {
    pub fn name(self) -> &'static str {
        match self {
            BenchmarkFunction::Sphere => "sphere",
            BenchmarkFunction::Rosenbrock => "rosenbrock",
            BenchmarkFunction::Rastrigin => "rastrigin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSection {
    pub functions: Vec<BenchmarkFunction>,
    pub dimension: usize,
    /// Additive Gaussian noise on every evaluation.
    pub noise_sigma: f64,
    pub repeats: usize,
    pub evaluation_budget: u64,
    pub optimizers: Vec<OptimizerSpec>,
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        BenchmarkSection {
            functions: vec![BenchmarkFunction::Sphere, BenchmarkFunction::Rosenbrock, BenchmarkFunction::Rastrigin],
            dimension: 30,
            noise_sigma: 0.0,
            repeats: 1,
            evaluation_budget: 300_000,
            optimizers: vec![
                OptimizerSpec::De(DeSection::default()),
                OptimizerSpec::Sussade(SussadeSection::default()),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub optimizers: Vec<OptimizerSpec>,
    /// Objective evaluations per `N` for every optimizer; absent keeps each
    /// optimizer's own iteration cap.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluations_per_n: Option<u64>,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection {
            optimizers: vec![
                OptimizerSpec::NrDe(NrDeSection::default()),
                OptimizerSpec::Pso(PsoSection::default()),
                OptimizerSpec::HillClimb(HillClimbSection::default()),
            ],
            evaluations_per_n: Some(20_000),
        }
    }
}

impl RunConfig {
    /// Minimal configuration for `experiment` with every default filled in.
    pub fn new(experiment: ExperimentKind, seed: u64) -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            experiment,
            seed,
            output_dir: None,
            threads: 0,
            record_wall_clock: false,
            optimizer: None,
            phase: PhaseSection::default(),
            gate: GateSection::default(),
            robustness: RobustnessSection::default(),
            benchmark: BenchmarkSection::default(),
            compare: CompareSection::default(),
        }
    }

    /// The configured optimizer, or the experiment's default.
    pub fn optimizer(&self) -> OptimizerSpec {
        if let Some(spec) = &self.optimizer {
            return spec.clone();
        }
        match self.experiment {
            ExperimentKind::PhaseScaling | ExperimentKind::Compare | ExperimentKind::Benchmark => {
                OptimizerSpec::NrDe(NrDeSection::default())
            }
            ExperimentKind::GateDesign | ExperimentKind::Robustness => {
                OptimizerSpec::Sussade(SussadeSection { population_size: GATE_POPULATION, ..SussadeSection::default() })
                    .with_evaluation_budget(GATE_EVALUATIONS)
            }
        }
    }

    /// Output directory before the root override is applied.
    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("runs").join(self.experiment.name()))
    }

    pub fn resolved_output_dir(&self, root: Option<&Path>) -> PathBuf {
        let dir = self.output_dir();
        match root {
            Some(root) if dir.is_relative() => root.join(dir),
            _ => dir,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Invalid(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        validate_optimizer(&self.optimizer(), "optimizer")?;
        match self.experiment {
            ExperimentKind::PhaseScaling | ExperimentKind::Compare => {
                let p = &self.phase;
                p.campaign(self.seed).validate().map_err(|e| HarnessError::Invalid(format!("phase: {e}")))?;
                if !(p.sigma >= 0.0 && p.sigma.is_finite()) {
                    return bad("phase.sigma must be finite and non-negative".into());
                }
                for (key, eta) in [("eta", p.eta), ("train_eta", p.train_eta)] {
                    if !(0.0..1.0).contains(&eta) {
                        return bad(format!("phase.{key} must lie in [0, 1)"));
                    }
                }
                if p.test_trials_factor == 0 || p.train_trials == Some(0) {
                    return bad("phase trial counts must be positive".into());
                }
                if self.experiment == ExperimentKind::Compare {
                    if self.compare.optimizers.is_empty() {
                        return bad("compare.optimizers must not be empty".into());
                    }
                    for (i, spec) in self.compare.optimizers.iter().enumerate() {
                        validate_optimizer(spec, &format!("compare.optimizers[{i}]"))?;
                        if self.compare.optimizers[..i].iter().any(|o| o.name() == spec.name()) {
                            return bad(format!("compare.optimizers lists `{}` twice", spec.name()));
                        }
                    }
                }
            }
            ExperimentKind::GateDesign | ExperimentKind::Robustness => {
                let g = &self.gate;
                if g.qubits == 0 || g.steps == 0 {
                    return bad("gate.qubits and gate.steps must be positive".into());
                }
                if g.detunings.len() != g.qubits {
                    return bad(format!("gate.detunings needs {} entries, found {}", g.qubits, g.detunings.len()));
                }
                if !(g.dt > 0.0 && g.amplitude_bound > 0.0 && g.filter_sigma >= 0.0) {
                    return bad("gate.dt and gate.amplitude_bound must be positive, gate.filter_sigma non-negative".into());
                }
                if self.experiment == ExperimentKind::Robustness {
                    let r = &self.robustness;
                    if r.trials == 0 || r.grid.is_empty() {
                        return bad("robustness needs a non-empty grid and at least one trial".into());
                    }
                    if r.grid.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
                        return bad("robustness.grid entries must be finite and non-negative".into());
                    }
                }
            }
            ExperimentKind::Benchmark => {
                let b = &self.benchmark;
                if b.functions.is_empty() || b.optimizers.is_empty() || b.dimension == 0 || b.repeats == 0 {
                    return bad("benchmark needs functions, optimizers, a positive dimension and repeats".into());
                }
                if !(b.noise_sigma >= 0.0) {
                    return bad("benchmark.noise_sigma must be non-negative".into());
                }
                for (i, spec) in b.optimizers.iter().enumerate() {
                    validate_optimizer(spec, &format!("benchmark.optimizers[{i}]"))?;
                }
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config always serializes")
    }
}

fn validate_optimizer(spec: &OptimizerSpec, key: &str) -> Result<()> {
    let checked = match spec {
        OptimizerSpec::De(s) => s.to_core(0, false).validate(),
        OptimizerSpec::NrDe(s) => s.to_core(0, true).validate(),
        OptimizerSpec::Sussade(s) => s.to_core(0, false).base.validate(),
        OptimizerSpec::Pso(s) if s.swarm_size == 0 => Err(qcontrol_core::Error::Config("swarm_size must be positive".into())),
        OptimizerSpec::HillClimb(s) if !(s.step_size >= 0.0) => {
            Err(qcontrol_core::Error::Config("step_size must be non-negative".into()))
        }
        _ => Ok(()),
    };
    checked.map_err(|e| HarnessError::Invalid(format!("{key}: {e}")))
}

/// Parses and validates a config from TOML text.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let de = toml::de::Deserializer::parse(text)
        .map_err(|e| HarnessError::Config { path: ".".into(), message: e.message().to_string() })?;
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| HarnessError::Config {
        path: e.path().to_string(),
        message: e.inner().message().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read { path: path.into(), source })?;
    parse_config_str(&text)
}
