use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use qcontrol_core::phase::{
    holevo_variance, make_sine_state, policy_objective, sharpness, simulate_trajectory, Arm, Outcome,
    PhaseSimConfig, Policy,
};
use qcontrol_core::optimizer::Objective;
use qcontrol_core::RngStream;

type Matrix = Vec<Vec<Complex64>>;

fn zeros(r: usize, c: usize) -> Matrix {
    vec![vec![Complex64::new(0.0, 0.0); c]; r]
}

fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = zeros(a.len(), b[0].len());
    for i in 0..a.len() {
        for j in 0..b[0].len() {
            for k in 0..b.len() {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn dagger(a: &Matrix) -> Matrix {
    let mut out = zeros(a[0].len(), a.len());
    for i in 0..a.len() {
        for j in 0..a[0].len() {
            out[j][i] = a[i][j].conj();
        }
    }
    out
}

fn trace(a: &Matrix) -> Complex64 {
    (0..a.len()).map(|i| a[i][i]).sum()
}

/// Annihilation operators on `n` photons, as maps from the n- to the (n-1)-photon basis.
fn annihilators(n: usize) -> (Matrix, Matrix) {
    let mut a = zeros(n, n + 1);
    let mut b = zeros(n, n + 1);
    for k in 0..=n {
        if k > 0 {
            a[k - 1][k] = Complex64::new((k as f64).sqrt(), 0.0);
        }
        if k < n {
            b[k][k] = Complex64::new(((n - k) as f64).sqrt(), 0.0);
        }
    }
    (a, b)
}

/// Port operator `(e^{iθ} a + (-1)^x b) / sqrt(2)` built from the ladder matrices.
fn port(n: usize, x: u8, theta: f64) -> Matrix {
    let (a, b) = annihilators(n);
    let phase = Complex64::from_polar(1.0, theta);
    let sign = if x == 0 { 1.0 } else { -1.0 };
    let s = 1.0 / (2.0 * n as f64).sqrt();
    let mut out = zeros(n, n + 1);
    for i in 0..n {
        for j in 0..=n {
            out[i][j] = (phase * a[i][j] + sign * b[i][j]) * s;
        }
    }
    out
}

fn column(v: &[Complex64]) -> Matrix {
    v.iter().map(|&x| vec![x]).collect()
}

fn norm_sqr(m: &Matrix) -> f64 {
    m.iter().flatten().map(|x| x.norm_sqr()).sum()
}

/// Probability of each outcome string for a lossless, noiseless run, by
/// multiplying operator products over every branch.
fn enumerate_branches(photons: usize, deltas: &[f64], phi: f64) -> HashMap<Vec<u8>, f64> {
    let start = column(make_sine_state(photons).unwrap().amplitudes());
    let mut out = HashMap::new();
    for bits in 0..(1u32 << photons) {
        let xs: Vec<u8> = (0..photons).map(|m| ((bits >> m) & 1) as u8).collect();
        let mut v = start.clone();
        let mut big_phi = 0.0f64;
        for (m, &x) in xs.iter().enumerate() {
            let n = photons - m;
            v = mat_mul(&port(n, x, phi - big_phi), &v);
            big_phi += if x == 0 { deltas[m] } else { -deltas[m] };
        }
        out.insert(xs, norm_sqr(&v));
    }
    out
}

#[test]
fn branch_enumeration_matches_trajectories() {
    let trials = 100_000u64;
    for photons in 1..=3 {
        let deltas: Vec<f64> = (0..photons).map(|m| 0.7 + 0.9 * m as f64).collect();
        let policy = Policy::new(deltas.clone()).unwrap();
        let phi = 1.3;
        let exact = enumerate_branches(photons, &deltas, phi);
        let total: f64 = exact.values().sum();
        assert!((total - 1.0).abs() < 1e-12);

        let cfg = PhaseSimConfig::new(photons);
        let root = RngStream::seeded(77, &[photons as u64]);
        let mut counts: HashMap<Vec<u8>, u64> = HashMap::new();
        for k in 0..trials {
            let t = simulate_trajectory(&policy, phi, &cfg, &mut root.child(k)).unwrap();
            let xs: Vec<u8> = t
                .outcomes
                .iter()
                .map(|o| match o {
                    Outcome::Zero => 0,
                    Outcome::One => 1,
                    Outcome::Lost => unreachable!(),
                })
                .collect();
            *counts.entry(xs).or_default() += 1;
        }
        for (xs, p) in &exact {
            let f = *counts.get(xs).unwrap_or(&0) as f64 / trials as f64;
            let sd = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((f - p).abs() <= 3.0 * sd + 1e-12, "N={photons} {xs:?}: freq {f} vs {p}");
        }
    }
}

#[test]
fn single_photon_outcome_frequency() {
    let trials = 100_000u64;
    let cfg = PhaseSimConfig::new(1);
    let policy = Policy::new(vec![2.2]).unwrap();
    let root = RngStream::seeded(3, &[]);
    for phi in [0.0, 0.9, 2.5, PI] {
        let mut zeros = 0u64;
        for k in 0..trials {
            let t = simulate_trajectory(&policy, phi, &cfg, &mut root.child(k)).unwrap();
            zeros += u64::from(t.outcomes[0] == Outcome::Zero);
        }
        let p = (phi / 2.0).cos().powi(2);
        let f = zeros as f64 / trials as f64;
        let sd = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((f - p).abs() <= 3.0 * sd + 1e-12, "phi={phi}: {f} vs {p}");
    }
}

#[test]
fn loss_channel_matches_density_matrix() {
    let v = column(make_sine_state(2).unwrap().amplitudes());
    let rho = mat_mul(&v, &dagger(&v));
    let (a, b) = annihilators(2);
    let mut lost = zeros(2, 2);
    for op in [&a, &b] {
        let term = mat_mul(&mat_mul(op, &rho), &dagger(op));
        for i in 0..2 {
            for j in 0..2 {
                lost[i][j] += term[i][j] / 2.0;
            }
        }
    }
    assert!((trace(&lost).re - 1.0).abs() < 1e-12);

    let state = make_sine_state(2).unwrap();
    let pa = state.loss_probability_a().unwrap();
    let mut after_a = state.clone();
    after_a.lose_from(Arm::A).unwrap();
    let mut after_b = state.clone();
    after_b.lose_from(Arm::B).unwrap();

    // The mixture of the two pure branches reproduces the channel output.
    for i in 0..2 {
        for j in 0..2 {
            let mix = pa * after_a.amplitudes()[i] * after_a.amplitudes()[j].conj()
                + (1.0 - pa) * after_b.amplitudes()[i] * after_b.amplitudes()[j].conj();
            assert!((mix - lost[i][j]).norm() < 1e-10);
        }
    }

    for step in 0..64 {
        let theta = step as f64 * TAU / 64.0;
        let k0 = port(1, 0, theta);
        let exact = trace(&mat_mul(&mat_mul(&k0, &lost), &dagger(&k0))).re;
        let branches = pa * after_a.probability_zero(theta).unwrap()
            + (1.0 - pa) * after_b.probability_zero(theta).unwrap();
        assert!((exact - branches).abs() < 1e-10, "theta={theta}");
    }
}

#[test]
fn sharpness_variance_shrinks_with_trials() {
    let obj_small = policy_objective(&PhaseSimConfig { trials: Some(40), ..PhaseSimConfig::new(4) }).unwrap();
    let obj_large = policy_objective(&PhaseSimConfig { trials: Some(160), ..PhaseSimConfig::new(4) }).unwrap();
    let x = [1.0, 2.0, 0.5, 0.3];
    let variance = |obj: &dyn Objective, tag: u64| {
        let s: Vec<f64> = (0..100).map(|r| obj.evaluate(&x, &mut RngStream::seeded(tag, &[r]))).collect();
        let m = s.iter().sum::<f64>() / s.len() as f64;
        s.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (s.len() - 1) as f64
    };
    let ratio = variance(&obj_small, 1) / variance(&obj_large, 2);
    assert!(ratio > 2.0 && ratio < 8.0, "variance ratio {ratio}");
}

#[test]
fn estimate_distribution_is_periodic_in_phi() {
    let cfg = PhaseSimConfig { sigma: 0.1, ..PhaseSimConfig::new(3) };
    let policy = Policy::new(vec![1.1, 0.6, 0.3]).unwrap();
    let trials = 20_000u64;
    let first_zero_rate = |phi: f64, seed: u64| {
        let root = RngStream::seeded(seed, &[]);
        (0..trials)
            .filter(|&k| simulate_trajectory(&policy, phi, &cfg, &mut root.child(k)).unwrap().outcomes[0] == Outcome::Zero)
            .count() as f64
            / trials as f64
    };
    let a = first_zero_rate(0.8, 10);
    let b = first_zero_rate(0.8 + TAU, 11);
    let sd = (a * (1.0 - a) * 2.0 / trials as f64).sqrt();
    assert!((a - b).abs() < 4.0 * sd, "{a} vs {b}");
}

#[test]
fn sine_state_policies_beat_random_guessing() {
    // With a sensible policy the estimate concentrates, so V_H is well below
    // that of a uniformly random estimate (S near 0).
    let cfg = PhaseSimConfig::new(6);
    let deltas: Vec<f64> = (0..6).map(|m| PI / 2f64.powi(m % 3)).map(|d| d % TAU).collect();
    let s = sharpness(&Policy::new(deltas).unwrap(), &cfg, &mut RngStream::seeded(4, &[])).unwrap();
    assert!(holevo_variance(s).unwrap() < 3.0, "S = {s}");
}
