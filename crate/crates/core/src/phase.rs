//! Adaptive Mach-Zehnder phase estimation, simulated one trajectory at a time.
//!
//! An `N`-photon state enters the interferometer photon by photon. After each
//! detection the controllable phase `Φ` moves by `±Δ_m` depending on which
//! port clicked; the final `Φ` is the phase estimate. Policies are scored by
//! the sharpness of the estimation error over random unknown phases.
//!
//! Conventions: the state is stored in the basis `|k in arm a, n-k in arm b>`;
//! a click in port `x` applies `(e^{iθ} a + (-1)^x b) / sqrt(2)`, so a single
//! photon gives `p(0) = cos²(θ/2)`; `Φ_0 = 0`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
#[allow(unused_imports)] // float math resolves through this trait under no_std
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::{Bounds, Objective};
use crate::rng::RngStream;

/// Version of the conventions above, written into policy files.
pub const CONVENTION_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSimConfig {
    pub photons: usize,
    /// Standard deviation of the Gaussian noise on each phase difference, radians.
    #[serde(default)]
    pub sigma: f64,
    /// Probability that a photon is lost before detection.
    #[serde(default)]
    pub eta: f64,
    /// Trajectories per sharpness sample; `None` means `10 N²`.
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl PhaseSimConfig {
    pub fn new(photons: usize) -> Self {
        PhaseSimConfig { photons, sigma: 0.0, eta: 0.0, trials: None, seed: 0 }
    }

    pub fn trial_count(&self) -> usize {
        self.trials.unwrap_or(10 * self.photons * self.photons)
    }

    pub fn validate(&self) -> Result<()> {
        if self.photons == 0 {
            return Err(Error::config("photon number must be at least 1"));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::config("sigma must be finite and non-negative"));
        }
        if !(self.eta >= 0.0 && self.eta < 1.0) {
            return Err(Error::config("eta must lie in [0, 1)"));
        }
        if self.trial_count() == 0 {
            return Err(Error::config("trial count must be at least 1"));
        }
        Ok(())
    }
}

fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y >= TAU {
        0.0
    } else {
        y
    }
}

/// Feedback vector `Δ`, one entry per photon, each on `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    deltas: Vec<f64>,
}

impl Policy {
    pub fn new(deltas: Vec<f64>) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::config("policy must have at least one entry"));
        }
        if let Some(&bad) = deltas.iter().find(|d| !(**d >= 0.0 && **d < TAU)) {
            return Err(Error::InvalidMetric(bad));
        }
        Ok(Policy { deltas })
    }

    /// Folds arbitrary angles onto `[0, 2π)`.
    pub fn wrapped(deltas: &[f64]) -> Result<Self> {
        if let Some(&bad) = deltas.iter().find(|d| !d.is_finite()) {
            return Err(Error::InvalidMetric(bad));
        }
        Self::new(deltas.iter().map(|&d| wrap_phase(d)).collect())
    }

    pub fn random(photons: usize, rng: &mut RngStream) -> Self {
        Policy { deltas: (0..photons).map(|_| rng.next_range(0.0, TAU)).collect() }
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }
}

/// Search domain for policies of `photons` entries.
pub fn policy_bounds(photons: usize) -> Result<Bounds> {
    Bounds::periodic(photons, 0.0, TAU)
}

/// Which arm a lost photon was taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    A,
    B,
}

/// Pure state of `n` photons in the two-mode symmetric basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricState {
    amplitudes: Vec<Complex64>,
}

impl SymmetricState {
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::config("state needs at least one photon"));
        }
        let mut s = SymmetricState { amplitudes };
        s.normalize()?;
        Ok(s)
    }

    /// `sqrt(2/(N+2)) sin((k+1)π/(N+2))`, `k = 0..=N`.
    pub fn sine(photons: usize) -> Result<Self> {
        if photons == 0 {
            return Err(Error::config("photon number must be at least 1"));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); photons + 1];
        fill_sine(&mut amplitudes);
        Ok(SymmetricState { amplitudes })
    }

    pub fn photons(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Mean photon number in arm a.
    pub fn mean_arm_a(&self) -> f64 {
        self.amplitudes.iter().enumerate().map(|(k, a)| k as f64 * a.norm_sqr()).sum()
    }

    fn normalize(&mut self) -> Result<()> {
        let norm = self.norm_sqr().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidMetric(norm));
        }
        for a in &mut self.amplitudes {
            *a /= norm;
        }
        Ok(())
    }

    /// Probability of a click in port 0 at phase difference `theta`.
    pub fn probability_zero(&self, theta: f64) -> Result<f64> {
        if self.photons() == 0 {
            return Err(Error::NoPhoton);
        }
        Ok(prob_zero(&self.amplitudes, Complex64::from_polar(1.0, theta)))
    }

    /// Unnormalized `A_x v` and its squared norm, without modifying `self`.
    pub fn kraus_branch(&self, x: u8, theta: f64) -> Result<(Vec<Complex64>, f64)> {
        let n = self.photons();
        if n == 0 {
            return Err(Error::NoPhoton);
        }
        let phase = Complex64::from_polar(1.0, theta);
        let sign = if x == 0 { 1.0 } else { -1.0 };
        let scale = 1.0 / (2.0 * n as f64).sqrt();
        let v = &self.amplitudes;
        let out: Vec<Complex64> = (0..n)
            .map(|k| (phase * ((k + 1) as f64).sqrt() * v[k + 1] + sign * ((n - k) as f64).sqrt() * v[k]) * scale)
            .collect();
        let p = out.iter().map(|a| a.norm_sqr()).sum();
        Ok((out, p))
    }

    /// Replaces the state by the normalized post-click state for outcome `x`
    /// and returns the outcome probability.
    pub fn collapse(&mut self, x: u8, theta: f64) -> Result<f64> {
        if self.photons() == 0 {
            return Err(Error::NoPhoton);
        }
        let phase = Complex64::from_polar(1.0, theta);
        let p0 = prob_zero(&self.amplitudes, phase);
        let p = if x == 0 { p0 } else { 1.0 - p0 };
        if !(p > 0.0) {
            return Err(Error::Contract("collapse onto an outcome of probability zero"));
        }
        collapse_in_place(&mut self.amplitudes, x, phase, p);
        Ok(p)
    }

    /// Probability that a lost photon is taken from arm a.
    pub fn loss_probability_a(&self) -> Result<f64> {
        let n = self.photons();
        if n == 0 {
            return Err(Error::NoPhoton);
        }
        Ok(self.mean_arm_a() / n as f64)
    }

    /// Annihilates one photon in the given arm and renormalizes.
    pub fn lose_from(&mut self, arm: Arm) -> Result<()> {
        if self.photons() == 0 {
            return Err(Error::NoPhoton);
        }
        remove_photon(&mut self.amplitudes, arm);
        self.normalize()
    }
}

/// Free-function form of [`SymmetricState::sine`].
pub fn make_sine_state(photons: usize) -> Result<SymmetricState> {
    SymmetricState::sine(photons)
}

fn fill_sine(v: &mut [Complex64]) {
    let n = v.len() - 1;
    let norm = (2.0 / (n + 2) as f64).sqrt();
    for (k, a) in v.iter_mut().enumerate() {
        *a = Complex64::new(norm * ((k + 1) as f64 * PI / (n + 2) as f64).sin(), 0.0);
    }
}

#[inline]
fn prob_zero(v: &[Complex64], phase: Complex64) -> f64 {
    let n = v.len() - 1;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let w = (((k + 1) * (n - k)) as f64).sqrt();
        acc += v[k + 1] * v[k].conj() * w;
    }
    (0.5 + (phase * acc).re / n as f64).clamp(0.0, 1.0)
}

#[inline]
fn collapse_in_place(v: &mut Vec<Complex64>, x: u8, phase: Complex64, p: f64) {
    let n = v.len() - 1;
    let sign = if x == 0 { 1.0 } else { -1.0 };
    let scale = 1.0 / (2.0 * n as f64 * p).sqrt();
    for k in 0..n {
        let up = phase * v[k + 1] * ((k + 1) as f64).sqrt();
        v[k] = (up + v[k] * (sign * ((n - k) as f64).sqrt())) * scale;
    }
    v.pop();
}

fn remove_photon(v: &mut Vec<Complex64>, arm: Arm) {
    let n = v.len() - 1;
    match arm {
        Arm::A => {
            for k in 1..=n {
                v[k - 1] = v[k] * (k as f64).sqrt();
            }
        }
        Arm::B => {
            for k in 0..n {
                v[k] *= ((n - k) as f64).sqrt();
            }
        }
    }
    v.pop();
}

/// Samples a click and updates the state. Returns the outcome and its probability.
pub fn measure_photon(state: &mut SymmetricState, theta: f64, rng: &mut RngStream) -> Result<(u8, f64)> {
    let p0 = state.probability_zero(theta)?;
    let x = if rng.next_uniform() <= p0 { 0 } else { 1 };
    let p = state.collapse(x, theta)?;
    Ok((x, p))
}

/// Removes one photon from an arm chosen in proportion to its mean occupation.
pub fn lose_photon(state: &mut SymmetricState, rng: &mut RngStream) -> Result<Arm> {
    let pa = state.loss_probability_a()?;
    let arm = if rng.next_uniform() <= pa { Arm::A } else { Arm::B };
    state.lose_from(arm)?;
    Ok(arm)
}

/// `Φ_m = Φ_{m-1} + (-1)^x Δ_m` on `[0, 2π)`.
pub fn update_phase(previous: f64, x: u8, delta: f64) -> f64 {
    wrap_phase(if x == 0 { previous + delta } else { previous - delta })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Zero,
    One,
    Lost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOutcome {
    pub outcomes: Vec<Outcome>,
    pub detected: usize,
    pub final_phase: f64,
    /// `Φ_M` on `[0, 2π)`; `Φ_0` when every photon was lost.
    pub estimate: f64,
}

impl TrajectoryOutcome {
    pub fn all_lost(&self) -> bool {
        self.detected == 0
    }
}

/// Scratch buffers and tables for repeated trajectories under one policy.
///
/// The feedback phase is tracked both as a real angle and as the phasor
/// `e^{iΦ}`, updated by multiplying precomputed `e^{±iΔ_m}`, so no
/// trigonometry is needed per photon in the noiseless case. The overlap
/// `Σ sqrt((k+1)(n-k)) v_{k+1} conj(v_k)` that gives the next click
/// probability is accumulated during the collapse pass.
struct Workspace<'a> {
    deltas: &'a [f64],
    rotors: Vec<Complex64>,
    sqrt: Vec<f64>,
    sine: Vec<Complex64>,
    sine_overlap: Complex64,
    state: Vec<Complex64>,
}

struct Run {
    final_phase: f64,
    /// `e^{iΦ_M}`.
    estimate: Complex64,
    detected: usize,
}

#[inline(always)]
fn wrap_once(x: f64) -> f64 {
    if x >= TAU {
        x - TAU
    } else if x < 0.0 {
        x + TAU
    } else {
        x
    }
}

impl<'a> Workspace<'a> {
    fn new(deltas: &'a [f64]) -> Self {
        let photons = deltas.len();
        let sqrt: Vec<f64> = (0..=photons + 1).map(|k| (k as f64).sqrt()).collect();
        let mut sine = vec![Complex64::new(0.0, 0.0); photons + 1];
        fill_sine(&mut sine);
        let mut ws = Workspace {
            deltas,
            rotors: deltas.iter().map(|&d| Complex64::from_polar(1.0, d)).collect(),
            sqrt,
            sine,
            sine_overlap: Complex64::new(0.0, 0.0),
            state: Vec::with_capacity(photons + 1),
        };
        ws.sine_overlap = ws.overlap(&ws.sine);
        ws
    }

    #[inline]
    fn overlap(&self, v: &[Complex64]) -> Complex64 {
        let n = v.len() - 1;
        let sq = &self.sqrt;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            acc += v[k + 1] * v[k].conj() * (sq[k + 1] * sq[n - k]);
        }
        acc
    }

    /// Runs one trajectory for the unknown phase `phi`, calling `record` with
    /// each outcome.
    #[inline]
    fn run(&mut self, phi: f64, sigma: f64, eta: f64, rng: &mut RngStream, mut record: impl FnMut(Outcome)) -> Run {
        let sq = &self.sqrt;
        let v = &mut self.state;
        v.clear();
        v.extend_from_slice(&self.sine);
        let mut acc = self.sine_overlap;
        let phi_phasor = Complex64::from_polar(1.0, phi);
        let mut big_phi = 0.0;
        let mut estimate = Complex64::new(1.0, 0.0);
        let mut detected = 0;
        for (m, &delta) in self.deltas.iter().enumerate() {
            let n = v.len() - 1;
            if eta > 0.0 && rng.next_uniform() <= eta {
                let mean_a: f64 = v.iter().enumerate().map(|(k, a)| k as f64 * a.norm_sqr()).sum();
                let arm = if rng.next_uniform() <= mean_a / n as f64 { Arm::A } else { Arm::B };
                remove_photon(v, arm);
                let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                for a in v.iter_mut() {
                    *a /= norm;
                }
                if n > 1 {
                    let (sq, state) = (&self.sqrt, &*v);
                    let k_max = state.len() - 1;
                    acc = (0..k_max).fold(Complex64::new(0.0, 0.0), |s, k| {
                        s + state[k + 1] * state[k].conj() * (sq[k + 1] * sq[k_max - k])
                    });
                }
                record(Outcome::Lost);
                continue;
            }
            let mut phase = phi_phasor * estimate.conj();
            if sigma > 0.0 {
                phase *= Complex64::from_polar(1.0, sigma * rng.next_standard_normal());
            }
            let p0 = (0.5 + (phase * acc).re / n as f64).clamp(0.0, 1.0);
            let x = if rng.next_uniform() <= p0 { 0u8 } else { 1 };
            let p = if x == 0 { p0 } else { 1.0 - p0 };
            let scale = 1.0 / (2.0 * n as f64 * p).sqrt();
            let up = phase * scale;
            let down = if x == 0 { scale } else { -scale };
            // Weights for the overlap of the (n-1)-photon state: sqrt(k (n - k)).
            let (v_n, sq_n) = (&mut v[..=n], &sq[..=n]);
            let mut prev = up * v_n[1] * sq_n[1] + v_n[0] * (down * sq_n[n]);
            v_n[0] = prev;
            let mut next = Complex64::new(0.0, 0.0);
            for k in 1..n {
                let a = up * v_n[k + 1] * sq_n[k + 1] + v_n[k] * (down * sq_n[n - k]);
                next += a * prev.conj() * (sq_n[k] * sq_n[n - k]);
                v_n[k] = a;
                prev = a;
            }
            v.pop();
            acc = next;
            if x == 0 {
                big_phi = wrap_once(big_phi + delta);
                estimate *= self.rotors[m];
            } else {
                big_phi = wrap_once(big_phi - delta);
                estimate *= self.rotors[m].conj();
            }
            detected += 1;
            record(if x == 0 { Outcome::Zero } else { Outcome::One });
        }
        Run { final_phase: big_phi, estimate, detected }
    }
}

fn check_policy(policy: &Policy, config: &PhaseSimConfig) -> Result<()> {
    config.validate()?;
    if policy.len() != config.photons {
        return Err(Error::DimensionMismatch { expected: config.photons, found: policy.len() });
    }
    Ok(())
}

/// Runs one photon-by-photon estimation of `phi`.
pub fn simulate_trajectory(
    policy: &Policy,
    phi: f64,
    config: &PhaseSimConfig,
    rng: &mut RngStream,
) -> Result<TrajectoryOutcome> {
    check_policy(policy, config)?;
    let mut outcomes = Vec::with_capacity(config.photons);
    let mut ws = Workspace::new(policy.deltas());
    let run = ws.run(phi, config.sigma, config.eta, rng, |o| outcomes.push(o));
    Ok(TrajectoryOutcome { outcomes, detected: run.detected, final_phase: run.final_phase, estimate: run.final_phase })
}

/// Draws used by one trajectory in the common case: the phase, one click per
/// photon, plus loss and noise draws when enabled.
fn trial_buffer(photons: usize, config: &PhaseSimConfig) -> usize {
    let per_photon = 1 + usize::from(config.sigma > 0.0) + usize::from(config.eta > 0.0);
    (1 + photons * per_photon).next_multiple_of(2)
}

/// One sharpness sample: `|Σ_k e^{i(φ_k - φ̃_k)}| / K` over `K` fresh random phases.
///
/// Trial `k` uses the child stream `k` of `rng`, so the result does not depend
/// on how much of `rng` was consumed before.
pub fn sharpness(policy: &Policy, config: &PhaseSimConfig, rng: &mut RngStream) -> Result<f64> {
    check_policy(policy, config)?;
    Ok(sharpness_unchecked(policy.deltas(), config, config.trial_count(), rng))
}

fn sharpness_unchecked(deltas: &[f64], config: &PhaseSimConfig, trials: usize, rng: &RngStream) -> f64 {
    let parent = rng.id();
    let mut trial_rng = rng.child(0).with_buffer_size(trial_buffer(deltas.len(), config));
    let mut ws = Workspace::new(deltas);
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..trials {
        trial_rng.reset_to_child_of(parent, k as u64);
        let phi = trial_rng.next_range(0.0, TAU);
        let run = ws.run(phi, config.sigma, config.eta, &mut trial_rng, |_| {});
        total += Complex64::from_polar(1.0, phi) * run.estimate.conj();
    }
    total.norm() / trials as f64
}

/// Sharpness of a set of estimation errors.
pub fn sharpness_from_residuals(residuals: &[f64]) -> f64 {
    if residuals.is_empty() {
        return 0.0;
    }
    let (re, im) = residuals.iter().fold((0.0, 0.0), |(re, im), &r| (re + r.cos(), im + r.sin()));
    (re * re + im * im).sqrt() / residuals.len() as f64
}

/// `V_H = S^{-2} - 1`.
pub fn holevo_variance(sharpness: f64) -> Result<f64> {
    if sharpness == 0.0 {
        return Err(Error::InfiniteVariance);
    }
    if !(sharpness > 0.0 && sharpness <= 1.0) {
        return Err(Error::InvalidMetric(sharpness));
    }
    Ok(sharpness.powi(-2) - 1.0)
}

/// Sharpness of a policy as a fitness to maximize; each evaluation draws a
/// fresh training set of phases from its stream.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseObjective {
    config: PhaseSimConfig,
}

impl PhaseObjective {
    pub fn new(config: PhaseSimConfig) -> Result<Self> {
        config.validate()?;
        Ok(PhaseObjective { config })
    }

    pub fn config(&self) -> &PhaseSimConfig {
        &self.config
    }

    /// Sharpness over `trials` trajectories instead of the configured count.
    pub fn sharpness_with_trials(&self, policy: &Policy, trials: usize, rng: &RngStream) -> Result<f64> {
        check_policy(policy, &self.config)?;
        if trials == 0 {
            return Err(Error::config("trial count must be at least 1"));
        }
        Ok(sharpness_unchecked(policy.deltas(), &self.config, trials, rng))
    }
}

impl Objective for PhaseObjective {
    fn dimension(&self) -> usize {
        self.config.photons
    }

    fn evaluate(&self, position: &[f64], rng: &mut RngStream) -> f64 {
        debug_assert_eq!(position.len(), self.config.photons);
        sharpness_unchecked(position, &self.config, self.config.trial_count(), rng)
    }
}

/// The objective optimized for a given simulation setting.
pub fn policy_objective(config: &PhaseSimConfig) -> Result<PhaseObjective> {
    PhaseObjective::new(config.clone())
}
