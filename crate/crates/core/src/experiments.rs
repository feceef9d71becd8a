//! Monte Carlo study on a synthetic positive system and the heating-rig evaluation.

use std::io::Write;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PosIdError, Result};
use crate::estimator::predict_with;
use crate::io::read_record;
use crate::methods::{estimate, Method, MethodSettings, Theta};
use crate::signals::{ImpulseResponse, TimeSeriesData};
use crate::tuning::{tune, HyperparamSpace, SearchStrategy, SplitSpec};

/// Synthetic system and sampling protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McProtocol {
    pub rho_true: f64,
    pub beta_true: f64,
    pub omega: f64,
    pub runs: usize,
    pub n_d: usize,
    pub snr_levels_db: Vec<f64>,
    pub seed: u64,
}

impl Default for McProtocol {
    fn default() -> Self {
        Self {
            rho_true: 0.98,
            beta_true: 0.92,
            omega: std::f64::consts::PI.powi(2) / 10.0,
            runs: 30,
            n_d: 200,
            snr_levels_db: vec![10.0, 20.0, 30.0],
            seed: 0,
        }
    }
}

impl McProtocol {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rho_true", self.rho_true), ("beta_true", self.beta_true)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(PosIdError::config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(PosIdError::config("omega must be positive"));
        }
        if self.runs == 0 || self.n_d == 0 {
            return Err(PosIdError::config("runs and n_D must be at least 1"));
        }
        if self.snr_levels_db.is_empty() || self.snr_levels_db.iter().any(|s| !s.is_finite()) {
            return Err(PosIdError::config("at least one finite SNR level is required"));
        }
        Ok(())
    }
}

/// `g_t = rho^t (1 + beta^t cos(2 pi omega t))` for `t < h`.
pub fn true_system(protocol: &McProtocol, h: usize) -> Result<ImpulseResponse> {
    if h == 0 {
        return Err(PosIdError::config("horizon must be at least 1"));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    ImpulseResponse::new(
        (0..h)
            .map(|t| {
                let t = t as f64;
                protocol.rho_true.powf(t) * (1.0 + protocol.beta_true.powf(t) * (two_pi * protocol.omega * t).cos())
            })
            .collect(),
    )
}

/// Symmetric random binary sequence in `{-1, +1}`.
pub fn gen_binary_input(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// Add white Gaussian noise with variance `||y||^2 / (n 10^(snr/10))`.
pub fn add_noise(y: &[f64], snr_db: f64, seed: u64) -> Result<Vec<f64>> {
    let power: f64 = y.iter().map(|v| v * v).sum();
    if y.is_empty() || !(power > 0.0) {
        return Err(PosIdError::data("cannot set an SNR for a zero-power signal"));
    }
    let var = power / (y.len() as f64 * 10f64.powf(snr_db / 10.0));
    let normal = Normal::new(0.0, var.sqrt()).map_err(|e| PosIdError::config(format!("noise level: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(y.iter().map(|v| v + normal.sample(&mut rng)).collect())
}

/// Noiseless at-rest output `y_t = sum_s g_s u_{t-s}`, `t < u.len()`.
pub fn simulate(g: &ImpulseResponse, u: &[f64]) -> Vec<f64> {
    let gv = g.values();
    (0..u.len()).map(|t| (0..=t.min(gv.len().saturating_sub(1))).map(|s| gv[s] * u[t - s]).sum()).collect()
}

/// `100 (1 - ||g_hat - g|| / ||g||)` over the common horizon.
pub fn fit_impulse(g_hat: &[f64], g_true: &[f64]) -> f64 {
    let n = g_hat.len().min(g_true.len());
    let err: f64 = (0..n).map(|t| (g_hat[t] - g_true[t]).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = g_true[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
    100.0 * (1.0 - err / norm)
}

/// `100 (1 - sqrt(sum (y - y_hat)^2 / sum (y - mean y)^2))`.
pub fn fit_output(y_hat: &[f64], y_test: &[f64]) -> f64 {
    let n = y_hat.len().min(y_test.len());
    let mean = y_test[..n].iter().sum::<f64>() / n as f64;
    let num: f64 = (0..n).map(|i| (y_test[i] - y_hat[i]).powi(2)).sum();
    let den: f64 = y_test[..n].iter().map(|v| (v - mean).powi(2)).sum();
    100.0 * (1.0 - (num / den).sqrt())
}

/// How each run selects hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningPlan {
    pub strategy: SearchStrategy,
    pub budget: usize,
    /// Grid points per axis for the default search box.
    pub points: usize,
    /// Training share of the temporal split.
    pub train_fraction: f64,
}

impl Default for TuningPlan {
    fn default() -> Self {
        Self { strategy: SearchStrategy::Adaptive, budget: 100, points: 5, train_fraction: 0.7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub settings: MethodSettings,
    pub tuning: TuningPlan,
    /// Horizon on which impulse responses are compared.
    pub metric_horizon: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { settings: MethodSettings::default(), tuning: TuningPlan::default(), metric_horizon: 400 }
    }
}

/// Tune on a temporal split of `data`, then refit on all of it.
pub fn tuned_estimate(
    method: Method,
    config: &ExperimentConfig,
    data: &TimeSeriesData,
    seed: u64,
) -> Result<(Option<Theta>, ImpulseResponse)> {
    let theta = if method.is_tunable() {
        let space = HyperparamSpace::default_for(method, config.settings.kernel, config.tuning.points);
        let split = SplitSpec::temporal(data.n_d(), config.tuning.train_fraction)?;
        let res =
            tune(method, &config.settings, &space, data, &split, config.tuning.budget, config.tuning.strategy, seed)?;
        if !res.score.is_finite() {
            return Err(PosIdError::Solver(format!("every {method} candidate failed")));
        }
        res.theta
    } else {
        // unused by the untuned methods
        Theta { rho: None, lambda: 1.0, beta: 0.5, gamma: None }
    };
    let est = estimate(method, &config.settings, &theta, data)?;
    Ok((method.is_tunable().then_some(theta), est.g))
}

/// Aggregates for one method at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodMetrics {
    pub method: Method,
    pub snr_db: f64,
    pub bias: f64,
    pub var: f64,
    pub mse: f64,
    /// `(run, fit)` for every successful run.
    pub fits: Vec<(usize, f64)>,
    pub failures: usize,
}

impl MethodMetrics {
    pub fn median_fit(&self) -> f64 {
        let mut v: Vec<f64> = self.fits.iter().map(|f| f.1).collect();
        if v.is_empty() {
            return f64::NAN;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Ordered by SNR level, then by method as requested.
    pub entries: Vec<MethodMetrics>,
}

impl MetricsReport {
    pub fn get(&self, method: Method, snr_db: f64) -> Option<&MethodMetrics> {
        self.entries.iter().find(|e| e.method == method && e.snr_db == snr_db)
    }

    /// `method,snr,bias,var,mse`
    pub fn write_metrics_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let wrap = |e: csv::Error| PosIdError::data(format!("CSV write failed: {e}"));
        w.write_record(["method", "snr", "bias", "var", "mse"]).map_err(wrap)?;
        for e in &self.entries {
            w.write_record([
                e.method.to_string(),
                e.snr_db.to_string(),
                e.bias.to_string(),
                e.var.to_string(),
                e.mse.to_string(),
            ])
            .map_err(wrap)?;
        }
        w.flush().map_err(|e| PosIdError::data(format!("CSV write failed: {e}")))
    }

    /// `method,snr,run,fit`
    pub fn write_fits_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let wrap = |e: csv::Error| PosIdError::data(format!("CSV write failed: {e}"));
        w.write_record(["method", "snr", "run", "fit"]).map_err(wrap)?;
        for e in &self.entries {
            for (run, fit) in &e.fits {
                w.write_record([e.method.to_string(), e.snr_db.to_string(), run.to_string(), fit.to_string()])
                    .map_err(wrap)?;
            }
        }
        w.flush().map_err(|e| PosIdError::data(format!("CSV write failed: {e}")))
    }
}

/// Seeds of run `run` at SNR index `level`: (input, noise, tuning).
fn run_seeds(master: u64, level: usize, run: usize) -> (u64, u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((level as u64) << 32) | run as u64);
    (rng.next_u64(), rng.next_u64(), rng.next_u64())
}

/// Generate one synthetic record of the protocol.
pub fn synthetic_run(protocol: &McProtocol, level: usize, run: usize) -> Result<TimeSeriesData> {
    let (s_in, s_noise, _) = run_seeds(protocol.seed, level, run);
    let g = true_system(protocol, protocol.n_d)?;
    let u = gen_binary_input(protocol.n_d, s_in);
    let y = add_noise(&simulate(&g, &u), protocol.snr_levels_db[level], s_noise)?;
    TimeSeriesData::at_rest(u, y)
}

fn aggregate(method: Method, snr_db: f64, truth: &[f64], results: &[(usize, Option<Vec<f64>>)]) -> MethodMetrics {
    let ok: Vec<(usize, &Vec<f64>)> = results.iter().filter_map(|(r, g)| g.as_ref().map(|g| (*r, g))).collect();
    let h = truth.len();
    let failures = results.len() - ok.len();
    if ok.is_empty() {
        return MethodMetrics { method, snr_db, bias: f64::NAN, var: f64::NAN, mse: f64::NAN, fits: vec![], failures };
    }
    let n = ok.len() as f64;
    let mut mean = vec![0.0; h];
    for (_, g) in &ok {
        for t in 0..h {
            mean[t] += g[t] / n;
        }
    }
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let bias = sq(&mean, truth).sqrt();
    let var = ok.iter().map(|(_, g)| sq(g, &mean)).sum::<f64>() / n;
    let mse = ok.iter().map(|(_, g)| sq(g, truth)).sum::<f64>() / n;
    let fits = ok.iter().map(|(r, g)| (*r, fit_impulse(g, truth))).collect();
    MethodMetrics { method, snr_db, bias, var, mse, fits, failures }
}

/// Run every method on every run and SNR level; runs execute in parallel.
pub fn run_monte_carlo(protocol: &McProtocol, methods: &[Method], config: &ExperimentConfig) -> Result<MetricsReport> {
    protocol.validate()?;
    if methods.is_empty() {
        return Err(PosIdError::config("no methods selected"));
    }
    if config.metric_horizon == 0 {
        return Err(PosIdError::config("metric horizon must be at least 1"));
    }
    let h = config.metric_horizon;
    let truth = true_system(protocol, h)?.into_values();
    let mut cfg = config.clone();
    if cfg.settings.horizon.is_none() {
        cfg.settings.horizon = Some(h);
    }
    let mut entries = Vec::new();
    for (level, &snr) in protocol.snr_levels_db.iter().enumerate() {
        let per_run: Vec<Vec<Option<Vec<f64>>>> = (0..protocol.runs)
            .into_par_iter()
            .map(|run| {
                let data = synthetic_run(protocol, level, run);
                let (_, _, s_tune) = run_seeds(protocol.seed, level, run);
                methods
                    .iter()
                    .map(|&m| {
                        let data = data.as_ref().ok()?;
                        let (_, g) = tuned_estimate(m, &cfg, data, s_tune).ok()?;
                        Some(g.resized(h))
                    })
                    .collect()
            })
            .collect();
        for (k, &m) in methods.iter().enumerate() {
            let results: Vec<(usize, Option<Vec<f64>>)> =
                per_run.iter().enumerate().map(|(r, v)| (r, v[k].clone())).collect();
            entries.push(aggregate(m, snr, &truth, &results));
        }
    }
    Ok(MetricsReport { entries })
}

/// Number of rows in the raw heating record and the trimmed variant.
pub const HEATING_ROWS: usize = 801;
pub const HEATING_TRIMMED_ROWS: usize = 700;
pub const HEATING_TRAIN: usize = 500;
pub const HEATING_TEST: usize = 200;

/// Training record (first 500 samples, inputs through sample 699) and test outputs.
pub fn heating_split(inputs: &[f64], outputs: &[f64]) -> Result<(TimeSeriesData, Vec<i64>, Vec<f64>)> {
    let n = inputs.len();
    if n != HEATING_ROWS && n != HEATING_TRIMMED_ROWS {
        return Err(PosIdError::data(format!(
            "heating record must have {HEATING_ROWS} rows (or {HEATING_TRIMMED_ROWS} trimmed), found {n}"
        )));
    }
    if outputs.len() != n {
        return Err(PosIdError::data("heating record has missing outputs"));
    }
    let keep = HEATING_TRAIN + HEATING_TEST;
    let train = TimeSeriesData::at_rest(inputs[..keep].to_vec(), outputs[..HEATING_TRAIN].to_vec())?;
    let times = (HEATING_TRAIN as i64..keep as i64).collect();
    Ok((train, times, outputs[HEATING_TRAIN..keep].to_vec()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatingFit {
    pub method: Method,
    pub theta: Option<Theta>,
    pub fit: f64,
}

/// Test-set prediction fit of each method on a heating record.
pub fn run_heating(path: &Path, methods: &[Method], config: &ExperimentConfig, seed: u64) -> Result<Vec<HeatingFit>> {
    let rec = read_record(path)?;
    let outputs: Vec<f64> = rec
        .outputs
        .iter()
        .enumerate()
        .map(|(i, y)| y.ok_or_else(|| PosIdError::data(format!("{}: row {} has no output", path.display(), i + 1))))
        .collect::<Result<_>>()?;
    let (train, times, y_test) = heating_split(&rec.inputs, &outputs)?;
    methods
        .par_iter()
        .map(|&m| {
            let (theta, g) = tuned_estimate(m, config, &train, seed)?;
            let y_hat = predict_with(&g, &train, &times)?;
            Ok(HeatingFit { method: m, theta, fit: fit_output(&y_hat, &y_test) })
        })
        .collect()
}

/// `method,fit,rho,lambda,beta,gamma` (hyperparameters blank when unused).
pub fn write_heating_csv<W: Write>(fits: &[HeatingFit], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let wrap = |e: csv::Error| PosIdError::data(format!("CSV write failed: {e}"));
    w.write_record(["method", "fit", "rho", "lambda", "beta", "gamma"]).map_err(wrap)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for f in fits {
        let t = f.theta;
        w.write_record([
            f.method.to_string(),
            f.fit.to_string(),
            opt(t.and_then(|t| t.rho)),
            opt(t.map(|t| t.lambda)),
            opt(t.map(|t| t.beta)),
            opt(t.and_then(|t| t.gamma)),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| PosIdError::data(format!("CSV write failed: {e}")))
}
