use qcontrol_core::scaling::{critical_value, LedgerPoint, RegressionFit, ScalingLedger};
use qcontrol_core::RngStream;

fn synthetic(rng: &mut RngStream, n: usize, a: f64, b: f64, s: f64) -> (Vec<f64>, Vec<f64>) {
    let xs: Vec<f64> = (0..n).map(|_| rng.next_range(0.0, 3.0)).collect();
    let ys = xs.iter().map(|x| a + b * x + s * rng.next_standard_normal()).collect();
    (xs, ys)
}

#[test]
fn prediction_interval_coverage() {
    let mut rng = RngStream::seeded(5, &[]);
    let fits = 4000;
    let mut hit = 0;
    for _ in 0..fits {
        let (xs, ys) = synthetic(&mut rng, 150, -0.2, -1.1, 0.1);
        let fit = RegressionFit::fit_linear(&xs, &ys).unwrap();
        let x = rng.next_range(0.0, 3.0);
        // δ_y bounds the fitted line, so coverage is measured on the true line.
        let y = -0.2 - 1.1 * x;
        hit += usize::from((y - fit.predict(x)).abs() <= fit.prediction_interval(x).unwrap());
    }
    // Binomial sd at p = 0.98, n = 4000 is about 0.0022.
    let coverage = hit as f64 / fits as f64;
    assert!((coverage - 0.98).abs() < 0.01, "{coverage}");
}

#[test]
fn default_critical_value() {
    assert!((critical_value(0.98).unwrap() - 2.326_347_874_040_841).abs() < 1e-9);
    assert!((critical_value(0.95).unwrap() - 1.959_963_984_540_054).abs() < 1e-9);
}

#[test]
fn ledger_round_trips_through_json() {
    let mut ledger = ScalingLedger::new(0.98).unwrap();
    for (n, v) in [(4, 0.3), (5, 0.22), (6, 0.19), (7, 0.15)] {
        ledger.push(LedgerPoint { n, v_h: v, policy_id: n as u64 * 11 }).unwrap();
    }
    let text = serde_json::to_string(&ledger).unwrap();
    let back: ScalingLedger = serde_json::from_str(&text).unwrap();
    assert_eq!(back, ledger);
    assert_eq!(back.evaluate(8, 0.13).unwrap(), ledger.evaluate(8, 0.13).unwrap());
}

#[test]
fn evaluation_does_not_mutate() {
    let mut ledger = ScalingLedger::default();
    for n in 4..8usize {
        ledger.push(LedgerPoint { n, v_h: 1.0 / n as f64, policy_id: 0 }).unwrap();
    }
    let before = ledger.clone();
    let far = ledger.evaluate(9, 10.0).unwrap();
    assert!(!far.accepted);
    assert_eq!(ledger, before);
    let rejected = ledger.accept_policy(9, 10.0, 1).unwrap();
    assert!(!rejected.accepted);
    assert_eq!(ledger, before);
}
