//! Gate synthesis with piecewise-constant control pulses.
//!
//! A pulse sequence holds one amplitude per control line and time step. Each
//! step evolves the system under a constant Hamiltonian for `dt`; the product
//! of the step unitaries, latest on the left, is scored against the target
//! gate by the intrinsic fidelity `|tr(U_T† U)| / d`.
//!
//! Basis convention: qubit 0 is the most significant bit of the basis index,
//! so the Toffoli gate (controls 0 and 1, target 2) swaps indices 6 and 7.

pub mod cmatrix;

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;
#[allow(unused_imports)] // float math resolves through this trait under no_std
use num_traits::Float;
use serde::{Deserialize, Serialize};

pub use cmatrix::{matmul_into, trace_overlap, CMatrix};

use crate::error::{Error, Result};
use crate::optimizer::{Bounds, Objective};
use crate::rng::RngStream;

/// Default ZZ coupling, radians per unit time.
pub const DEFAULT_COUPLING: f64 = TAU * 0.15;
/// Default detunings, radians per unit time. Nonzero values are required:
/// without them the surrogate generates only a small subalgebra of su(8) and
/// the Toffoli gate is unreachable.
pub const DEFAULT_DETUNINGS: [f64; 3] = [TAU * 0.03, TAU * 0.05, TAU * 0.07];
/// Default amplitude bound `|ε_i| ≤ 0.7`.
pub const DEFAULT_AMPLITUDE_BOUND: f64 = 0.7;
/// Steps per line of the reference instance.
pub const DEFAULT_STEPS: usize = 27;

/// Maps the control values of one time step to a Hermitian matrix.
pub trait ControlHamiltonian: Sync {
    fn dimension(&self) -> usize;

    fn control_lines(&self) -> usize;

    fn hamiltonian(&self, controls: &[f64]) -> CMatrix;
}

/// Qubit chain `H = Σ ε_i X_i + Σ Δ_i Z_i + J Σ Z_i Z_{i+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingSurrogate {
    qubits: usize,
    coupling: f64,
    detunings: Vec<f64>,
    #[serde(skip)]
    diagonal: Vec<f64>,
}

impl IsingSurrogate {
    pub fn new(qubits: usize, coupling: f64, detunings: Vec<f64>) -> Result<Self> {
        if qubits == 0 || qubits > 10 {
            return Err(Error::config("qubit count must lie in 1..=10"));
        }
        if detunings.len() != qubits {
            return Err(Error::DimensionMismatch { expected: qubits, found: detunings.len() });
        }
        if !coupling.is_finite() || detunings.iter().any(|d| !d.is_finite()) {
            return Err(Error::config("coupling and detunings must be finite"));
        }
        let d = 1usize << qubits;
        let z = |b: usize, q: usize| if (b >> (qubits - 1 - q)) & 1 == 0 { 1.0 } else { -1.0 };
        let diagonal = (0..d)
            .map(|b| {
                let local: f64 = (0..qubits).map(|q| detunings[q] * z(b, q)).sum();
                let chain: f64 = (0..qubits.saturating_sub(1)).map(|q| z(b, q) * z(b, q + 1)).sum();
                local + coupling * chain
            })
            .collect();
        Ok(IsingSurrogate { qubits, coupling, detunings, diagonal })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }
}

impl Default for IsingSurrogate {
    fn default() -> Self {
        Self::new(3, DEFAULT_COUPLING, DEFAULT_DETUNINGS.to_vec()).expect("default surrogate is valid")
    }
}

impl ControlHamiltonian for IsingSurrogate {
    fn dimension(&self) -> usize {
        1 << self.qubits
    }

    fn control_lines(&self) -> usize {
        self.qubits
    }

    fn hamiltonian(&self, controls: &[f64]) -> CMatrix {
        let d = self.dimension();
        let mut h = CMatrix::zeros(d);
        for (b, &z) in self.diagonal.iter().enumerate() {
            h[(b, b)] = Complex64::new(z, 0.0);
        }
        for (q, &eps) in controls.iter().enumerate().take(self.qubits) {
            let mask = 1 << (self.qubits - 1 - q);
            for b in 0..d {
                h[(b, b ^ mask)] += Complex64::new(eps, 0.0);
            }
        }
        h
    }
}

/// Control amplitudes, one row per line, stored line-major
/// (`index = line · steps + t`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    lines: usize,
    steps: usize,
    dt: f64,
    amplitudes: Vec<f64>,
}

impl PulseSequence {
    pub fn new(lines: usize, steps: usize, dt: f64, amplitudes: Vec<f64>) -> Result<Self> {
        if lines == 0 || steps == 0 {
            return Err(Error::config("pulse sequence needs at least one line and one step"));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::config("time step must be positive"));
        }
        if amplitudes.len() != lines * steps {
            return Err(Error::DimensionMismatch { expected: lines * steps, found: amplitudes.len() });
        }
        if let Some(&bad) = amplitudes.iter().find(|a| !a.is_finite()) {
            return Err(Error::InvalidMetric(bad));
        }
        Ok(PulseSequence { lines, steps, dt, amplitudes })
    }

    pub fn zeros(lines: usize, steps: usize, dt: f64) -> Result<Self> {
        Self::new(lines, steps, dt, vec![0.0; lines * steps])
    }

    /// `T = round(tau / dt)` steps.
    pub fn steps_for(tau: f64, dt: f64) -> Result<usize> {
        if !(dt > 0.0) || !(tau > 0.0) {
            return Err(Error::config("tau and dt must be positive"));
        }
        Ok((tau / dt).round() as usize)
    }

    pub fn lines(&self) -> usize {
        self.lines
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn duration(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.amplitudes
    }

    pub fn amplitude(&self, line: usize, t: usize) -> f64 {
        self.amplitudes[line * self.steps + t]
    }

    pub fn line(&self, line: usize) -> &[f64] {
        &self.amplitudes[line * self.steps..(line + 1) * self.steps]
    }

    /// Control values of every line at step `t`.
    pub fn column_into(&self, t: usize, out: &mut [f64]) {
        for (l, o) in out.iter_mut().enumerate().take(self.lines) {
            *o = self.amplitudes[l * self.steps + t];
        }
    }
}

/// Target gate, control model and discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct GateProblem<H: ControlHamiltonian = IsingSurrogate> {
    target: CMatrix,
    hamiltonian: H,
    dt: f64,
    steps: usize,
    amplitude_bound: f64,
}

impl<H: ControlHamiltonian> GateProblem<H> {
    pub fn new(target: CMatrix, hamiltonian: H, dt: f64, steps: usize, amplitude_bound: f64) -> Result<Self> {
        if target.dim() != hamiltonian.dimension() {
            return Err(Error::DimensionMismatch { expected: hamiltonian.dimension(), found: target.dim() });
        }
        if target.unitarity_defect() > 1e-10 {
            return Err(Error::config("target gate is not unitary"));
        }
        if !(dt > 0.0) || steps == 0 {
            return Err(Error::config("dt must be positive and steps at least 1"));
        }
        if !(amplitude_bound > 0.0) || !amplitude_bound.is_finite() {
            return Err(Error::config("amplitude bound must be positive"));
        }
        Ok(GateProblem { target, hamiltonian, dt, steps, amplitude_bound })
    }

    pub fn target(&self) -> &CMatrix {
        &self.target
    }

    pub fn hamiltonian(&self) -> &H {
        &self.hamiltonian
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn amplitude_bound(&self) -> f64 {
        self.amplitude_bound
    }

    pub fn lines(&self) -> usize {
        self.hamiltonian.control_lines()
    }

    /// Number of optimized parameters, `lines · steps`.
    pub fn parameter_count(&self) -> usize {
        self.lines() * self.steps
    }

    pub fn bounds(&self) -> Result<Bounds> {
        Bounds::uniform(self.parameter_count(), -self.amplitude_bound, self.amplitude_bound)
    }

    pub fn pulses_from_flat(&self, flat: &[f64]) -> Result<PulseSequence> {
        PulseSequence::new(self.lines(), self.steps, self.dt, flat.to_vec())
    }
}

impl GateProblem<IsingSurrogate> {
    /// Toffoli on the default three-qubit surrogate, 27 steps of unit length.
    pub fn toffoli_reference() -> Self {
        Self::new(toffoli(), IsingSurrogate::default(), 1.0, DEFAULT_STEPS, DEFAULT_AMPLITUDE_BOUND)
            .expect("reference problem is valid")
    }
}

/// Permutation matrix of the Toffoli gate.
pub fn toffoli() -> CMatrix {
    let perm = |i: usize| match i {
        6 => 7,
        7 => 6,
        other => other,
    };
    CMatrix::from_fn(8, |i, j| if perm(j) == i { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
}

/// `exp(-i H dt)`.
pub fn propagate_step(h: &CMatrix, dt: f64) -> Result<CMatrix> {
    if h.hermitian_defect() > 1e-10 {
        return Err(Error::Contract("step Hamiltonian is not Hermitian"));
    }
    h.scale(Complex64::new(0.0, -dt)).expm()
}

/// Product of step unitaries, the first Hamiltonian acting first.
pub fn compose_steps(hamiltonians: &[CMatrix], dt: f64) -> Result<CMatrix> {
    let d = hamiltonians.first().map_or(1, CMatrix::dim);
    let mut acc = CMatrix::identity(d);
    let mut tmp = CMatrix::zeros(d);
    for h in hamiltonians {
        if h.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: h.dim() });
        }
        let u = propagate_step(h, dt)?;
        matmul_into(&mut tmp, &u, &acc);
        core::mem::swap(&mut acc, &mut tmp);
    }
    Ok(acc)
}

/// `U(ε(τ-δt)) ··· U(ε(δt)) U(ε(0))`.
pub fn compose_unitary<H: ControlHamiltonian>(pulses: &PulseSequence, problem: &GateProblem<H>) -> Result<CMatrix> {
    if pulses.lines() != problem.lines() || pulses.steps() != problem.steps() {
        return Err(Error::config("pulse shape does not match the gate problem"));
    }
    let d = problem.hamiltonian.dimension();
    let mut acc = CMatrix::identity(d);
    let mut tmp = CMatrix::zeros(d);
    let mut column = vec![0.0; pulses.lines()];
    for t in 0..pulses.steps() {
        pulses.column_into(t, &mut column);
        let h = problem.hamiltonian.hamiltonian(&column);
        let u = h.scale(Complex64::new(0.0, -pulses.dt())).expm()?;
        matmul_into(&mut tmp, &u, &acc);
        core::mem::swap(&mut acc, &mut tmp);
    }
    Ok(acc)
}

/// `|tr(U_T† U)| / d`, clamped to `[0, 1]` against rounding.
pub fn intrinsic_fidelity(target: &CMatrix, unitary: &CMatrix) -> Result<f64> {
    if target.dim() != unitary.dim() {
        return Err(Error::DimensionMismatch { expected: target.dim(), found: unitary.dim() });
    }
    Ok((trace_overlap(target, unitary) / target.dim() as f64).min(1.0))
}

/// Normalized Gaussian kernel truncated at `±4σ` (σ in steps).
pub fn gaussian_kernel(sigma_steps: f64) -> Vec<f64> {
    if sigma_steps <= 0.0 {
        return vec![1.0];
    }
    let half = (4.0 * sigma_steps).ceil() as isize;
    let raw: Vec<f64> = (-half..=half).map(|j| (-((j * j) as f64) / (2.0 * sigma_steps * sigma_steps)).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

fn convolve_line(line: &[f64], kernel: &[f64], out: &mut [f64]) {
    let half = (kernel.len() / 2) as isize;
    let last = line.len() as isize - 1;
    for (t, o) in out.iter_mut().enumerate() {
        *o = kernel
            .iter()
            .enumerate()
            .map(|(j, w)| w * line[(t as isize + j as isize - half).clamp(0, last) as usize])
            .sum();
    }
}

/// Smooths each line with a Gaussian of width `sigma` (time units), edges
/// replicated. `sigma = 0` returns the sequence unchanged.
pub fn gaussian_filter(pulses: &PulseSequence, sigma: f64) -> Result<PulseSequence> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::config("filter width must be finite and non-negative"));
    }
    if sigma == 0.0 {
        return Ok(pulses.clone());
    }
    let kernel = gaussian_kernel(sigma / pulses.dt());
    let mut out = vec![0.0; pulses.amplitudes.len()];
    for l in 0..pulses.lines() {
        convolve_line(pulses.line(l), &kernel, &mut out[l * pulses.steps..(l + 1) * pulses.steps]);
    }
    PulseSequence::new(pulses.lines, pulses.steps, pulses.dt, out)
}

/// Fidelity of the filtered pulses; what the optimizer maximizes.
#[derive(Debug, Clone, PartialEq)]
pub struct GateObjective<H: ControlHamiltonian = IsingSurrogate> {
    problem: GateProblem<H>,
    filter_sigma: f64,
}

impl<H: ControlHamiltonian> GateObjective<H> {
    pub fn new(problem: GateProblem<H>, filter_sigma: f64) -> Result<Self> {
        if !(filter_sigma >= 0.0) || !filter_sigma.is_finite() {
            return Err(Error::config("filter width must be finite and non-negative"));
        }
        Ok(GateObjective { problem, filter_sigma })
    }

    pub fn problem(&self) -> &GateProblem<H> {
        &self.problem
    }

    pub fn filter_sigma(&self) -> f64 {
        self.filter_sigma
    }

    pub fn fidelity(&self, pulses: &PulseSequence) -> Result<f64> {
        let shaped = gaussian_filter(pulses, self.filter_sigma)?;
        intrinsic_fidelity(&self.problem.target, &compose_unitary(&shaped, &self.problem)?)
    }

    pub fn fidelity_flat(&self, flat: &[f64]) -> Result<f64> {
        self.fidelity(&self.problem.pulses_from_flat(flat)?)
    }
}

impl<H: ControlHamiltonian> Objective for GateObjective<H> {
    fn dimension(&self) -> usize {
        self.problem.parameter_count()
    }

    fn evaluate(&self, position: &[f64], _rng: &mut RngStream) -> f64 {
        // Non-finite positions are excluded by the optimizer bounds; a failed
        // evaluation scores as the worst fidelity.
        self.fidelity_flat(position).unwrap_or(0.0)
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

pub fn gate_objective<H: ControlHamiltonian>(problem: GateProblem<H>, filter_sigma: f64) -> Result<GateObjective<H>> {
    GateObjective::new(problem, filter_sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessPoint {
    pub delta_eps: f64,
    pub mean_fidelity: f64,
    pub std_error: f64,
}

/// Mean fidelity when every amplitude is perturbed by `δε · rand(-1, 1)`,
/// for each `δε` of the grid. Trial `k` at grid point `g` uses stream
/// `rng / g / k`.
pub fn robustness_scan<H: ControlHamiltonian>(
    pulses: &PulseSequence,
    objective: &GateObjective<H>,
    grid: &[f64],
    trials: usize,
    rng: &RngStream,
) -> Result<Vec<RobustnessPoint>> {
    if trials == 0 {
        return Err(Error::config("robustness scan needs at least one trial"));
    }
    if let Some(&bad) = grid.iter().find(|d| !(**d >= 0.0) || !d.is_finite()) {
        return Err(Error::InvalidParameter(if bad.is_finite() { "negative noise amplitude" } else { "non-finite noise amplitude" }));
    }
    let base = objective.fidelity(pulses)?;
    let mut out = Vec::with_capacity(grid.len());
    for (g, &delta) in grid.iter().enumerate() {
        if delta == 0.0 {
            out.push(RobustnessPoint { delta_eps: 0.0, mean_fidelity: base, std_error: 0.0 });
            continue;
        }
        let parent = rng.child(g as u64);
        let mut samples = Vec::with_capacity(trials);
        for k in 0..trials {
            let mut r = parent.child(k as u64);
            let noisy: Vec<f64> = pulses.as_flat().iter().map(|&a| a + delta * r.next_range(-1.0, 1.0)).collect();
            let p = PulseSequence::new(pulses.lines(), pulses.steps(), pulses.dt(), noisy)?;
            samples.push(objective.fidelity(&p)?);
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let std_error = if samples.len() > 1 {
            (samples.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        out.push(RobustnessPoint { delta_eps: delta, mean_fidelity: mean, std_error });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn toffoli_structure() {
        let t = toffoli();
        assert!(t.unitarity_defect() < 1e-15);
        assert_eq!(t[(7, 6)], c(1.0));
        assert_eq!(t[(6, 7)], c(1.0));
        assert_eq!(t[(5, 5)], c(1.0));
        assert_eq!(intrinsic_fidelity(&t, &CMatrix::identity(8)).unwrap(), 0.75);
        assert_eq!(intrinsic_fidelity(&t, &t).unwrap(), 1.0);
    }

    #[test]
    fn global_phase_is_ignored() {
        let t = toffoli();
        let f = intrinsic_fidelity(&t, &t.scale(Complex64::from_polar(1.0, 0.77))).unwrap();
        assert!((f - 1.0).abs() < 1e-15);
        assert!(intrinsic_fidelity(&t, &CMatrix::identity(4)).is_err());
    }

    #[test]
    fn zero_hamiltonian_gives_identity() {
        let u = propagate_step(&CMatrix::zeros(4), 1.0).unwrap();
        assert_eq!(u, CMatrix::identity(4));
    }

    #[test]
    fn pi_pulse_flips_a_qubit() {
        let dt = 0.25;
        let h = CMatrix::from_rows(&[vec![c(0.0), c(PI / (2.0 * dt))], vec![c(PI / (2.0 * dt)), c(0.0)]]).unwrap();
        let u = propagate_step(&h, dt).unwrap();
        assert!((u[(0, 1)] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((u[(0, 1)].norm() - 1.0).abs() < 1e-12);
        assert!(u[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn non_hermitian_step_rejected() {
        let h = CMatrix::from_rows(&[vec![c(0.0), c(1.0)], vec![c(0.0), c(0.0)]]).unwrap();
        assert!(matches!(propagate_step(&h, 1.0), Err(Error::Contract(_))));
    }

    #[test]
    fn surrogate_hamiltonian_terms() {
        let s = IsingSurrogate::new(3, 0.5, vec![0.1, 0.2, 0.3]).unwrap();
        let h = s.hamiltonian(&[1.0, 2.0, 3.0]);
        assert!(h.hermitian_defect() == 0.0);
        // |000>: Z = +1 everywhere, two ZZ bonds.
        assert!((h[(0, 0)].re - (0.6 + 1.0)).abs() < 1e-15);
        // |101>: Z = (-1, +1, -1), both bonds anti-aligned.
        assert!((h[(5, 5)].re - (-0.1 + 0.2 - 0.3 - 1.0)).abs() < 1e-15);
        assert_eq!(h[(0, 4)], c(1.0));
        assert_eq!(h[(0, 2)], c(2.0));
        assert_eq!(h[(0, 1)], c(3.0));
        assert_eq!(h[(0, 3)], c(0.0));
    }

    #[test]
    fn zero_pulses_without_drift_score_three_quarters() {
        let s = IsingSurrogate::new(3, 0.0, vec![0.0; 3]).unwrap();
        let problem = GateProblem::new(toffoli(), s, 1.0, 27, PI).unwrap();
        let obj = gate_objective(problem, 1.0).unwrap();
        assert_eq!(obj.dimension(), 81);
        let f = obj.evaluate(&[0.0; 81], &mut RngStream::seeded(0, &[]));
        assert!((f - 0.75).abs() < 1e-15);
    }

    #[test]
    fn kernel_weights() {
        let k = gaussian_kernel(1.0);
        assert_eq!(k.len(), 9);
        let truncated: f64 = (-4..=4).map(|j: i32| 0.398_942_280_401_432_7 * (-(j * j) as f64 / 2.0).exp()).sum();
        assert!((k[4] - 0.398_942_280_401_432_7 / truncated).abs() < 1e-12);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn filter_identities() {
        let constant = PulseSequence::new(2, 10, 1.0, vec![0.7; 20]).unwrap();
        let f = gaussian_filter(&constant, 1.5).unwrap();
        assert!(f.as_flat().iter().all(|v| (v - 0.7).abs() < 1e-12));
        let mut amps = vec![0.0; 30];
        amps[15] = 1.0;
        let impulse = PulseSequence::new(1, 30, 1.0, amps).unwrap();
        assert_eq!(gaussian_filter(&impulse, 0.0).unwrap(), impulse);
        let smoothed = gaussian_filter(&impulse, 1.0).unwrap();
        assert!((smoothed.amplitude(0, 15) - gaussian_kernel(1.0)[4]).abs() < 1e-15);
        assert!(gaussian_filter(&impulse, -1.0).is_err());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let problem = GateProblem::toffoli_reference();
        let pulses = PulseSequence::zeros(3, 10, 1.0).unwrap();
        assert!(matches!(compose_unitary(&pulses, &problem), Err(Error::Config(_))));
    }
}
