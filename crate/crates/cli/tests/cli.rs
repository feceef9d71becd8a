use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use posid::estimator::{identify, predict_with};
use posid::experiments::{add_noise, gen_binary_input, simulate, true_system, McProtocol};
use posid::io::{read_data, read_impulse_response};
use posid::kernels::{KernelKind, KernelSpec};
use posid::PositiveIdConfig;

fn posid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_posid")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_record(dir: &Path, n: usize) -> PathBuf {
    let g = true_system(&McProtocol::default(), n).unwrap();
    let u = gen_binary_input(n, 3);
    let y = add_noise(&simulate(&g, &u), 30.0, 4).unwrap();
    let mut text = String::from("t,u,y\n");
    for t in 0..n {
        text.push_str(&format!("{t},{},{}\n", u[t], y[t]));
    }
    let path = dir.join("record.csv");
    fs::write(&path, text).unwrap();
    path
}

fn identify_args<'a>(data: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "identify", "--data", data, "--out", out, "--kernel", "tc", "--beta", "0.8", "--rho", "0.98", "--lambda", "0.1",
    ]
}

#[test]
fn missing_data_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.csv");
    let out = dir.path().to_str().unwrap();
    let o = posid(&identify_args(missing.to_str().unwrap(), out));
    assert!(!o.status.success());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("nowhere.csv"), "{}", stderr(&o));
}

#[test]
fn missing_hyperparameter_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_record(dir.path(), 60);
    let o = posid(&["identify", "--data", data.to_str().unwrap(), "--kernel", "tc", "--beta", "0.8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("rho"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "lamda = 0.1\n").unwrap();
    let o = posid(&["--config", cfg.to_str().unwrap(), "kernels", "--beta", "0.8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lamda"), "{}", stderr(&o));
}

#[test]
fn identify_matches_library_and_predict_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_record(dir.path(), 100);
    let out = dir.path().join("fit");
    let o = posid(&identify_args(data.to_str().unwrap(), out.to_str().unwrap()));
    assert!(o.status.success(), "{}", stderr(&o));

    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("model.json")).unwrap()).unwrap();
    for key in ["a", "rho", "lambda", "m", "kernel", "theta", "diagnostics"] {
        assert!(meta.get(key).is_some(), "model.json lacks {key}");
    }

    let d = read_data(&data).unwrap();
    let cfg = PositiveIdConfig::new(KernelSpec::from_params(KernelKind::Tc, 0.8, None).unwrap(), 0.98, 0.1);
    let lib = identify(&cfg, &d).unwrap();
    let cli = read_impulse_response(&out.join("model.csv")).unwrap();
    assert_eq!(cli.values(), lib.g.values());
    assert_eq!(meta["m"].as_u64().unwrap() as usize, lib.m);

    let o = posid(&[
        "predict",
        "--data",
        data.to_str().unwrap(),
        "--model",
        out.join("model.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let expected = predict_with(&lib.g, &d, d.sample_times()).unwrap();
    let text = fs::read_to_string(out.join("predictions.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,y_hat,y"));
    let got: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(got.len(), expected.len());
    for (a, b) in got.iter().zip(&expected) {
        assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
    }
}

#[test]
fn tune_grid_writes_full_trace() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_record(dir.path(), 80);
    let out = dir.path().join("tune");
    let o = posid(&[
        "tune",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--method",
        "g",
        "--kernel",
        "tc",
        "--rho-range",
        "0.95:0.99:2",
        "--lambda-range",
        "0.01:1:2:log",
        "--beta-range",
        "0.8:0.8:1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("rho,lambda,beta,gamma,score"));
    assert_eq!(lines.count(), 4);
    assert!(out.join("best.json").exists());
}

#[test]
fn montecarlo_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = posid(&[
            "--workers",
            "2",
            "montecarlo",
            "--out",
            out.to_str().unwrap(),
            "--runs",
            "1",
            "--snr",
            "20",
            "--methods",
            "b,e,g",
            "--strategy",
            "random",
            "--budget",
            "3",
            "--seed",
            "11",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        (fs::read(out.join("metrics.csv")).unwrap(), fs::read(out.join("fits.csv")).unwrap())
    };
    let start = Instant::now();
    let a = run("a");
    let b = run("b");
    assert!(start.elapsed().as_secs() < 60);
    assert_eq!(a, b);
    assert!(String::from_utf8(a.0).unwrap().starts_with("method,snr,bias,var,mse\n"));
    assert!(String::from_utf8(a.1).unwrap().starts_with("method,snr,run,fit\n"));
}

#[test]
fn short_heating_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("heating.dat");
    let rows: String = (0..10).map(|t| format!("{t} 1.0 {}\n", 0.5 * t as f64)).collect();
    fs::write(&path, rows).unwrap();
    let o = posid(&["heating", "--data", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("801"), "{}", stderr(&o));
}
