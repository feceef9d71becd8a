mod common;

use std::io::Write;

use posid::experiments::*;
use posid::methods::Method;
use posid::tuning::SearchStrategy;

fn quick_config() -> ExperimentConfig {
    ExperimentConfig {
        tuning: TuningPlan { strategy: SearchStrategy::Random, budget: 4, points: 3, train_fraction: 0.7 },
        ..ExperimentConfig::default()
    }
}

#[test]
fn binary_input_statistics() {
    let u = gen_binary_input(10_000, 17);
    let mean = u.iter().sum::<f64>() / u.len() as f64;
    assert!(mean.abs() <= 0.05, "{mean}");
    assert_ne!(gen_binary_input(100, 1), gen_binary_input(100, 2));
}

#[test]
fn noise_hits_target_snr() {
    let y: Vec<f64> = (0..10_000).map(|t| (t as f64 * 0.01).sin() + 0.5).collect();
    let noisy = add_noise(&y, 20.0, 3).unwrap();
    let py: f64 = y.iter().map(|v| v * v).sum();
    let pw: f64 = noisy.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
    let snr = 10.0 * (py / pw).log10();
    assert!((snr - 20.0).abs() <= 0.5, "{snr}");
    let quiet = add_noise(&y, 300.0, 3).unwrap();
    let pq: f64 = quiet.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
    assert!((pq / py).sqrt() <= 1e-14);
}

#[test]
fn output_fit_decreases_with_offset() {
    let y: Vec<f64> = (0..50).map(|t| (t as f64 * 0.3).sin()).collect();
    let mut last = f64::INFINITY;
    for c in [0.0, 0.1, 0.2, 0.5, 1.0] {
        let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
        let f = fit_output(&shifted, &y);
        assert!(f < last || c == 0.0);
        last = f;
    }
}

#[test]
fn near_noiseless_single_run() {
    let p = McProtocol { runs: 1, snr_levels_db: vec![300.0], seed: 5, ..McProtocol::default() };
    // the default budget stops near 99.7 on this seed; the remaining gap is search precision
    let mut cfg = ExperimentConfig::default();
    cfg.tuning.budget = 400;
    let report = run_monte_carlo(&p, &[Method::G], &cfg).unwrap();
    let e = report.get(Method::G, 300.0).unwrap();
    assert_eq!(e.failures, 0);
    assert!(e.fits[0].1 >= 99.9, "{}", e.fits[0].1);
}

#[test]
fn aggregates_decompose_and_reproduce() {
    let p = McProtocol { runs: 4, snr_levels_db: vec![20.0], seed: 8, ..McProtocol::default() };
    let methods = [Method::B, Method::D];
    let a = run_monte_carlo(&p, &methods, &quick_config()).unwrap();
    for e in &a.entries {
        assert!(e.mse >= e.var && e.var >= 0.0);
        assert!((e.mse - (e.bias * e.bias + e.var)).abs() <= 1e-8 * e.mse);
    }
    let b = run_monte_carlo(&p, &methods, &quick_config()).unwrap();
    let (mut ma, mut mb, mut fa, mut fb) = (vec![], vec![], vec![], vec![]);
    a.write_metrics_csv(&mut ma).unwrap();
    b.write_metrics_csv(&mut mb).unwrap();
    a.write_fits_csv(&mut fa).unwrap();
    b.write_fits_csv(&mut fb).unwrap();
    assert_eq!(ma, mb);
    assert_eq!(fa, fb);
    assert!(String::from_utf8(ma).unwrap().starts_with("method,snr,bias,var,mse\n"));
    assert!(String::from_utf8(fa).unwrap().starts_with("method,snr,run,fit\n"));
}

#[test]
fn estimates_entering_metrics_are_nonnegative() {
    let p = McProtocol { runs: 1, snr_levels_db: vec![10.0], seed: 2, ..McProtocol::default() };
    let data = synthetic_run(&p, 0, 0).unwrap();
    for m in [Method::B, Method::C, Method::D, Method::E, Method::G] {
        let (_, g) = tuned_estimate(m, &quick_config(), &data, 1).unwrap();
        assert!(g.values().iter().all(|&v| v >= 0.0), "{m}");
    }
}

#[test]
fn heating_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("heating.dat");
    let mut f = std::fs::File::create(&path).unwrap();
    let mut r = common::rng(4);
    let u = common::binary(801, &mut r);
    let g: Vec<f64> = (0..60).map(|t| 0.9f64.powi(t)).collect();
    let y = common::simulate(&g, &u);
    for t in 0..801 {
        writeln!(f, "{} {} {}", t + 1, u[t], y[t]).unwrap();
    }
    drop(f);
    let fits = run_heating(&path, &[Method::B, Method::D], &quick_config(), 0).unwrap();
    assert_eq!(fits.len(), 2);
    assert!(fits.iter().all(|h| h.fit > 99.0), "{fits:?}");

    let short = dir.path().join("short.csv");
    let mut text = String::from("t,u,y\n");
    for t in 0..10 {
        text.push_str(&format!("{t},1,1\n"));
    }
    std::fs::write(&short, text).unwrap();
    let err = run_heating(&short, &[Method::B], &quick_config(), 0).unwrap_err().to_string();
    assert!(err.contains("801"), "{err}");
}
