//! Power-law scaling campaigns with an accept-reject gate.
//!
//! Each accepted `(N, V_H)` pair is a point `(ln N, ln V_H)`. Once enough
//! points exist, a new candidate at `N` is accepted only if its `ln V_H` lies
//! within the regression prediction interval of the line fitted to the
//! previous points; otherwise the optimization at that `N` is repeated with a
//! fresh seed.

use alloc::vec::Vec;

#[allow(unused_imports)] // float math resolves through this trait under no_std
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, label};

/// Confidence level of the acceptance test.
pub const DEFAULT_CONFIDENCE: f64 = 0.98;
/// Two-sided normal quantile at 98% confidence.
pub const Z_98: f64 = 2.326_347_874_040_841;
/// Re-optimizations allowed per `N` before the campaign gives up.
pub const DEFAULT_RETRY_CAP: usize = 20;

const MIN_POINTS: usize = 3;

/// Standard normal quantile, by bisection on the complementary error function.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter("quantile probability must lie in (0, 1)"));
    }
    let cdf = |z: f64| 0.5 * libm::erfc(-z / core::f64::consts::SQRT_2);
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Two-sided normal critical value for a confidence level.
pub fn critical_value(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidParameter("confidence must lie in (0, 1)"));
    }
    normal_quantile(0.5 * (1.0 + confidence))
}

/// Ordinary least-squares line with the sufficient statistics needed for
/// prediction intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub n_points: usize,
    pub residual_ss: f64,
    pub x_mean: f64,
    pub x_ss: f64,
}

impl RegressionFit {
    pub fn fit_linear(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch { expected: xs.len(), found: ys.len() });
        }
        let n = xs.len();
        if n < MIN_POINTS {
            return Err(Error::InsufficientData { found: n, required: MIN_POINTS });
        }
        if let Some(&bad) = xs.iter().chain(ys).find(|v| !v.is_finite()) {
            return Err(Error::InvalidMetric(bad));
        }
        let nf = n as f64;
        let x_mean = xs.iter().sum::<f64>() / nf;
        let y_mean = ys.iter().sum::<f64>() / nf;
        let mut x_ss = 0.0;
        let mut xy = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            x_ss += (x - x_mean) * (x - x_mean);
            xy += (x - x_mean) * (y - y_mean);
        }
        if x_ss <= 0.0 {
            return Err(Error::config("regression needs at least two distinct abscissae"));
        }
        let slope = xy / x_ss;
        let intercept = y_mean - slope * x_mean;
        let residual_ss = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - (intercept + slope * x);
                r * r
            })
            .sum();
        Ok(RegressionFit { slope, intercept, n_points: n, residual_ss, x_mean, x_ss })
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }

    /// Residual variance estimate `RSS / (n - 2)`.
    pub fn residual_variance(&self) -> Result<f64> {
        if self.n_points < MIN_POINTS {
            return Err(Error::InsufficientData { found: self.n_points, required: MIN_POINTS });
        }
        Ok(self.residual_ss / (self.n_points - 2) as f64)
    }

    /// Half-width of the 98% prediction interval at `x_new`.
    pub fn prediction_interval(&self, x_new: f64) -> Result<f64> {
        self.prediction_interval_with(x_new, Z_98)
    }

    pub fn prediction_interval_with(&self, x_new: f64, z: f64) -> Result<f64> {
        let s2 = self.residual_variance()?;
        let d = x_new - self.x_mean;
        let leverage = 1.0 / self.n_points as f64 + d * d / self.x_ss;
        Ok(z * (s2 * leverage).sqrt())
    }
}

fn log_point(n: usize, v_h: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::config("particle number must be positive"));
    }
    if !(v_h > 0.0) || !v_h.is_finite() {
        return Err(Error::InvalidMetric(v_h));
    }
    Ok(((n as f64).ln(), v_h.ln()))
}

/// Least squares on `(ln N, ln V_H)`.
pub fn fit_loglog(points: &[(usize, f64)]) -> Result<RegressionFit> {
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(n, v) in points {
        let (x, y) = log_point(n, v)?;
        xs.push(x);
        ys.push(y);
    }
    RegressionFit::fit_linear(&xs, &ys)
}

/// Free-function form of [`RegressionFit::prediction_interval`].
pub fn prediction_interval(fit: &RegressionFit, x_new: f64) -> Result<f64> {
    fit.prediction_interval(x_new)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerPoint {
    pub n: usize,
    pub v_h: f64,
    /// Seed of the optimization that produced the policy.
    pub policy_id: u64,
}

/// Outcome of testing one candidate against the fitted line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub accepted: bool,
    pub predicted: f64,
    /// `ln V_H - predicted`.
    pub log_residual: f64,
    pub delta_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingLedger {
    points: Vec<LedgerPoint>,
    fit: Option<RegressionFit>,
    confidence: f64,
    z: f64,
}

impl Default for ScalingLedger {
    fn default() -> Self {
        ScalingLedger { points: Vec::new(), fit: None, confidence: DEFAULT_CONFIDENCE, z: Z_98 }
    }
}

impl ScalingLedger {
    pub fn new(confidence: f64) -> Result<Self> {
        Ok(ScalingLedger { confidence, z: critical_value(confidence)?, ..Default::default() })
    }

    pub fn points(&self) -> &[LedgerPoint] {
        &self.points
    }

    pub fn fit(&self) -> Option<&RegressionFit> {
        self.fit.as_ref()
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    pub fn critical_value(&self) -> f64 {
        self.z
    }

    /// Appends a point unconditionally, keeping the points sorted by `N`.
    pub fn push(&mut self, point: LedgerPoint) -> Result<()> {
        log_point(point.n, point.v_h)?;
        let at = self.points.partition_point(|p| p.n <= point.n);
        self.points.insert(at, point);
        self.refit()
    }

    fn refit(&mut self) -> Result<()> {
        self.fit = if self.points.len() >= MIN_POINTS {
            let pairs: Vec<(usize, f64)> = self.points.iter().map(|p| (p.n, p.v_h)).collect();
            Some(fit_loglog(&pairs)?)
        } else {
            None
        };
        Ok(())
    }

    /// Tests a candidate without modifying the ledger.
    pub fn evaluate(&self, n: usize, v_h: f64) -> Result<Verdict> {
        let (x, y) = log_point(n, v_h)?;
        let fit = self
            .fit
            .as_ref()
            .ok_or(Error::InsufficientData { found: self.points.len(), required: MIN_POINTS })?;
        let predicted = fit.predict(x);
        let delta_y = fit.prediction_interval_with(x, self.z)?;
        let log_residual = y - predicted;
        Ok(Verdict { accepted: log_residual.abs() <= delta_y, predicted, log_residual, delta_y })
    }

    /// Tests a candidate and appends it on acceptance.
    pub fn accept_policy(&mut self, n: usize, v_h: f64, policy_id: u64) -> Result<Verdict> {
        let verdict = self.evaluate(n, v_h)?;
        if verdict.accepted {
            self.push(LedgerPoint { n, v_h, policy_id })?;
        }
        Ok(verdict)
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

/// Free-function form of [`ScalingLedger::accept_policy`].
pub fn accept_policy(ledger: &mut ScalingLedger, n: usize, v_h: f64, policy_id: u64) -> Result<Verdict> {
    ledger.accept_policy(n, v_h, policy_id)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CampaignMode {
    FixedIterations,
    AcceptReject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    /// Particle numbers, strictly ascending.
    pub n_values: Vec<usize>,
    /// Accept-reject applies from this `N` on; `None` disables it.
    pub switch_over: Option<usize>,
    pub retry_cap: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            n_values: Vec::new(),
            switch_over: None,
            retry_cap: DEFAULT_RETRY_CAP,
            confidence: DEFAULT_CONFIDENCE,
            seed: 0,
        }
    }
}

impl CampaignConfig {
    pub fn mode_for(&self, n: usize) -> CampaignMode {
        match self.switch_over {
            Some(s) if n >= s => CampaignMode::AcceptReject,
            _ => CampaignMode::FixedIterations,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(Error::config("campaign needs at least one N"));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("N values must be strictly ascending"));
        }
        if self.n_values[0] == 0 {
            return Err(Error::config("N values must be positive"));
        }
        if self.retry_cap == 0 {
            return Err(Error::config("retry cap must be at least 1"));
        }
        critical_value(self.confidence)?;
        if let Some(s) = self.switch_over {
            let fixed = self.n_values.iter().filter(|&&n| n < s).count();
            if fixed < MIN_POINTS && self.n_values.iter().any(|&n| n >= s) {
                return Err(Error::config("accept-reject needs at least three fixed-iteration N values first"));
            }
        }
        Ok(())
    }

    /// Seed of the `attempt`-th optimization at `n`.
    pub fn attempt_seed(&self, n: usize, attempt: usize) -> u64 {
        derive_seed(self.seed, &[label("attempt"), n as u64, attempt as u64])
    }
}

/// Result of one optimization at a given `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    pub v_h: f64,
    pub policy: Vec<f64>,
    pub evaluations: u64,
}

/// One row of the persisted ledger; rejected attempts are kept with
/// `accepted = false`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerRecord {
    pub n: usize,
    pub v_h: f64,
    pub log_residual: Option<f64>,
    pub delta_y: Option<f64>,
    pub accepted: bool,
    pub seed: u64,
    pub wall_seconds: Option<f64>,
}

impl LedgerRecord {
    /// Re-checks the acceptance inequality recorded in this row.
    pub fn satisfies_gate(&self) -> Option<bool> {
        match (self.log_residual, self.delta_y) {
            (Some(r), Some(d)) => Some(r.abs() <= d),
            _ => None,
        }
    }
}

/// Wall-clock source; the core has no clock of its own.
pub trait Clock {
    fn seconds(&mut self) -> Option<f64>;
}

/// Clock that reports nothing, keeping ledgers free of timing data.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&mut self) -> Option<f64> {
        None
    }
}

/// Receives every ledger row as soon as it is decided.
pub trait LedgerSink {
    fn record(&mut self, record: &LedgerRecord) -> Result<()>;
}

impl LedgerSink for Vec<LedgerRecord> {
    fn record(&mut self, record: &LedgerRecord) -> Result<()> {
        self.push(*record);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcceptedPolicy {
    pub n: usize,
    pub seed: u64,
    pub v_h: f64,
    pub policy: Vec<f64>,
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CampaignOutcome {
    pub ledger: ScalingLedger,
    pub records: Vec<LedgerRecord>,
    pub policies: Vec<AcceptedPolicy>,
}

/// Campaign aborted at some `N`; `partial` holds everything decided before.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignFailure {
    pub error: Error,
    pub partial: CampaignOutcome,
}

/// Runs `optimize(n, seed)` for each `N` in turn.
///
/// Below the switch-over every result is appended. From the switch-over on a
/// result is appended only if it passes the gate; otherwise `optimize` is
/// called again with the next attempt seed, up to `retry_cap` times.
pub fn run_scaling_campaign<F>(
    config: &CampaignConfig,
    mut optimize: F,
    clock: &mut dyn Clock,
    sink: &mut dyn LedgerSink,
) -> core::result::Result<CampaignOutcome, CampaignFailure>
where
    F: FnMut(usize, u64) -> Result<Attempt>,
{
    let mut outcome = CampaignOutcome::default();
    let fail = |error: Error, partial: CampaignOutcome| Err(CampaignFailure { error, partial });
    if let Err(e) = config.validate() {
        return fail(e, outcome);
    }
    outcome.ledger = match ScalingLedger::new(config.confidence) {
        Ok(l) => l,
        Err(e) => return fail(e, outcome),
    };

    for &n in &config.n_values {
        let mode = config.mode_for(n);
        let mut decided = false;
        for attempt in 0..config.retry_cap {
            let seed = config.attempt_seed(n, attempt);
            let started = clock.seconds();
            let result = match optimize(n, seed) {
                Ok(r) => r,
                Err(e) => return fail(e, outcome),
            };
            let wall_seconds = match (started, clock.seconds()) {
                (Some(a), Some(b)) => Some(b - a),
                _ => None,
            };
            let verdict = match outcome.ledger.fit() {
                Some(_) => match outcome.ledger.evaluate(n, result.v_h) {
                    Ok(v) => Some(v),
                    Err(e) => return fail(e, outcome),
                },
                None => {
                    if let Err(e) = log_point(n, result.v_h) {
                        return fail(e, outcome);
                    }
                    None
                }
            };
            let accepted = match mode {
                CampaignMode::FixedIterations => true,
                CampaignMode::AcceptReject => verdict.is_some_and(|v| v.accepted),
            };
            let record = LedgerRecord {
                n,
                v_h: result.v_h,
                log_residual: verdict.map(|v| v.log_residual),
                delta_y: verdict.map(|v| v.delta_y),
                accepted,
                seed,
                wall_seconds,
            };
            if let Err(e) = sink.record(&record) {
                return fail(e, outcome);
            }
            outcome.records.push(record);
            if accepted {
                if let Err(e) = outcome.ledger.push(LedgerPoint { n, v_h: result.v_h, policy_id: seed }) {
                    return fail(e, outcome);
                }
                outcome.policies.push(AcceptedPolicy {
                    n,
                    seed,
                    v_h: result.v_h,
                    policy: result.policy,
                    attempts: attempt + 1,
                });
                decided = true;
                break;
            }
        }
        if !decided {
            return fail(Error::RetryCapExhausted { n, attempts: config.retry_cap }, outcome);
        }
    }
    Ok(outcome)
}
