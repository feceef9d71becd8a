mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use posid::estimator::{identify, predict_with, PositiveIdModel};
use posid::experiments::{run_heating, run_monte_carlo, write_heating_csv, ExperimentConfig, McProtocol, TuningPlan};
use posid::extensions::{identify_nup, identify_snp, NupConfig, SnpConfig};
use posid::io::{read_data, read_impulse_response, read_record, write_atomic, write_impulse_response};
use posid::kernels::{KernelKind, KernelSpec};
use posid::methods::{estimate, Method, MethodSettings, Theta};
use posid::qp::QPStatus;
use posid::signals::hankel_numerical_rank;
use posid::tuning::{tune, HyperparamSpace, ParamRange, SearchStrategy, SplitSpec};
use posid::{ImpulseResponse, PosIdError, PositiveIdConfig, TimeSeriesData};

use config::{parse_range, FileConfig};

#[derive(Parser)]
#[command(name = "posid", version, about = "Impulse response identification with positivity constraints")]
struct Cli {
    /// TOML settings file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Parallel jobs for tuning and Monte Carlo runs (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ModelArgs {
    /// b, c, d, e, g, nup, snp or zsr.
    #[arg(long)]
    method: Option<String>,
    /// tc, dc or ss.
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    a_min: Option<f64>,
    #[arg(long)]
    delta_m: Option<usize>,
    /// Length of the reported impulse response.
    #[arg(long)]
    horizon: Option<usize>,
    /// Mode order for nup/snp.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// FIR length for b-e and zsr.
    #[arg(long)]
    n_g: Option<usize>,
}

#[derive(Args, Clone, Default)]
struct SearchArgs {
    /// grid, random or adaptive.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model and write `model.csv` and `model.json`.
    Identify {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Hold-out hyperparameter search; writes `trace.csv` and `best.json`.
    Tune {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Training share of the temporal split.
        #[arg(long)]
        train_fraction: Option<f64>,
        /// Ranges as `lo:hi[:points[:log]]`.
        #[arg(long)]
        rho_range: Option<String>,
        #[arg(long)]
        lambda_range: Option<String>,
        #[arg(long)]
        beta_range: Option<String>,
        #[arg(long)]
        gamma_range: Option<String>,
    },
    /// Synthetic study; writes `metrics.csv` and `fits.csv`.
    Montecarlo {
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated, e.g. `b,c,d,e,g`.
        #[arg(long)]
        methods: Option<String>,
        #[arg(long)]
        runs: Option<usize>,
        /// Use the full 120-run protocol.
        #[arg(long)]
        full: bool,
        #[arg(long)]
        n_d: Option<usize>,
        /// Comma-separated SNR levels in dB.
        #[arg(long)]
        snr: Option<String>,
        #[arg(long)]
        kernel: Option<String>,
        #[arg(long)]
        metric_horizon: Option<usize>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Heating-rig evaluation; writes `heating_fits.csv`.
    Heating {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        methods: Option<String>,
        #[arg(long)]
        kernel: Option<String>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Convolve a stored impulse response with a record; writes `predictions.csv`.
    Predict {
        #[arg(long)]
        data: Option<PathBuf>,
        /// `s,g` file written by `identify`.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print kernel diagnostics.
    Kernels {
        #[arg(long)]
        kernel: Option<String>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
        /// Gram size for the PSD check.
        #[arg(long, default_value_t = 50)]
        n: usize,
    },
}

enum Failure {
    Lib(PosIdError),
    NotOptimal(String),
}

impl From<PosIdError> for Failure {
    fn from(e: PosIdError) -> Self {
        Failure::Lib(e)
    }
}

type CmdResult = Result<(), Failure>;

fn cfg_err(msg: impl Into<String>) -> Failure {
    Failure::Lib(PosIdError::Config(msg.into()))
}

fn require<T>(v: Option<T>, name: &str) -> Result<T, Failure> {
    v.ok_or_else(|| cfg_err(format!("missing required setting `{name}`")))
}

fn parse_kernel(s: &str) -> Result<KernelKind, Failure> {
    s.parse::<KernelKind>().map_err(Failure::Lib)
}

fn parse_method(s: &str) -> Result<Method, Failure> {
    s.parse::<Method>().map_err(Failure::Lib)
}

fn parse_methods(s: &str) -> Result<Vec<Method>, Failure> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(|p| parse_method(p.trim())).collect()
}

fn parse_strategy(s: &str) -> Result<SearchStrategy, Failure> {
    match s.to_ascii_lowercase().as_str() {
        "grid" => Ok(SearchStrategy::Grid),
        "random" => Ok(SearchStrategy::Random),
        "adaptive" => Ok(SearchStrategy::Adaptive),
        other => Err(cfg_err(format!("unknown search strategy `{other}`"))),
    }
}

fn range_flag(flag: &Option<String>, name: &str) -> Result<Option<ParamRange>, Failure> {
    flag.as_deref().map(|s| parse_range(s).map_err(|e| cfg_err(format!("--{name}-range: {e}")))).transpose()
}

fn out_dir(flag: &Option<PathBuf>, file: &FileConfig) -> Result<PathBuf, Failure> {
    let dir = flag.clone().or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|source| PosIdError::Io { path: dir.display().to_string(), source })?;
    Ok(dir)
}

fn data_path(flag: &Option<PathBuf>, file: &FileConfig) -> Result<PathBuf, Failure> {
    require(flag.clone().or_else(|| file.data.clone()), "data")
}

/// Model settings with flags taking precedence over the file.
struct Resolved {
    method: Method,
    kernel: KernelKind,
    theta: Theta,
    settings: MethodSettings,
}

fn resolve_model(m: &ModelArgs, f: &FileConfig, need_theta: bool) -> Result<Resolved, Failure> {
    let method = parse_method(m.method.as_deref().or(f.method.as_deref()).unwrap_or("g"))?;
    let kernel = parse_kernel(m.kernel.as_deref().or(f.kernel.as_deref()).unwrap_or("tc"))?;
    let mut settings = MethodSettings { kernel, ..MethodSettings::default() };
    if let Some(v) = m.a_min.or(f.a_min) {
        settings.a_min = v;
    }
    if let Some(v) = m.delta_m.or(f.delta_m) {
        settings.delta_m = v;
    }
    if let Some(v) = m.order.or(f.order) {
        settings.order = v;
    }
    if let Some(v) = m.n_g.or(f.n_g) {
        settings.n_g = v;
    }
    settings.horizon = m.horizon.or(f.horizon);
    settings.epsilon = m.epsilon.or(f.epsilon);
    let rho = m.rho.or(f.rho);
    let lambda = m.lambda.or(f.lambda);
    let beta = m.beta.or(f.beta);
    let gamma = m.gamma.or(f.gamma);
    let theta = if need_theta {
        let needs_kernel = !matches!(method, Method::B | Method::C);
        Theta {
            rho: if method.uses_rho() { Some(require(rho, "rho")?) } else { None },
            lambda: if needs_kernel { require(lambda, "lambda")? } else { lambda.unwrap_or(1.0) },
            beta: if needs_kernel { require(beta, "beta")? } else { beta.unwrap_or(0.5) },
            gamma: if needs_kernel && kernel == KernelKind::Dc { Some(require(gamma, "gamma")?) } else { gamma },
        }
    } else {
        Theta { rho, lambda: lambda.unwrap_or(1.0), beta: beta.unwrap_or(0.5), gamma }
    };
    Ok(Resolved { method, kernel, theta, settings })
}

fn base_config(r: &Resolved) -> Result<PositiveIdConfig, Failure> {
    let kernel = KernelSpec::from_params(r.kernel, r.theta.beta, r.theta.gamma)?;
    let mut cfg = PositiveIdConfig::new(kernel, require(r.theta.rho, "rho")?, r.theta.lambda)
        .with_a_min(r.settings.a_min)
        .with_delta_m(r.settings.delta_m);
    cfg.horizon = r.settings.horizon;
    Ok(cfg)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> posid::Result<()>) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn json_bytes(v: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s.into_bytes()
}

fn model_meta(method: Method, model: &PositiveIdModel) -> serde_json::Value {
    let d = &model.diagnostics;
    json!({
        "method": method.name(),
        "a": model.a,
        "rho": model.rho,
        "lambda": model.lambda,
        "kernel": {
            "kind": model.kernel.kind().to_string(),
            "beta": model.kernel.beta(),
            "gamma": model.kernel.gamma(),
        },
        "m": model.m,
        "theta": model.theta,
        "horizon": model.g.horizon(),
        "diagnostics": {
            "status": format!("{:?}", d.status),
            "m0": d.m0,
            "initial_m": d.initial_m,
            "iterations": d.iterations,
            "cap_reached": d.cap_reached,
            "check_horizon": d.check_horizon,
            "min_g": d.min_g,
            "primal_residual": d.primal_residual,
            "dual_residual": d.dual_residual,
            "gap": d.gap,
            "qp_iterations": d.qp_iterations,
            "h_norm": d.h_norm,
            "h_tail_bound": d.h_tail_bound,
        },
    })
}

fn check_status(status: QPStatus, detail: &str) -> CmdResult {
    if status == QPStatus::Optimal {
        Ok(())
    } else {
        Err(Failure::NotOptimal(format!("solver finished with status {status:?}; {detail}")))
    }
}

fn cmd_identify(data: &Option<PathBuf>, out: &Option<PathBuf>, model: &ModelArgs, file: &FileConfig) -> CmdResult {
    let r = resolve_model(model, file, true)?;
    let path = data_path(data, file)?;
    let d = read_data(&path)?;
    let (g, meta, status) = match r.method {
        Method::G | Method::Nup | Method::Snp => {
            let base = base_config(&r)?;
            let fitted = match r.method {
                Method::G => identify(&base, &d)?,
                Method::Nup => {
                    let mut c = NupConfig::new(base, r.settings.order);
                    if let Some(e) = r.settings.epsilon {
                        c.epsilon = e;
                    }
                    identify_nup(&c, &d)?
                }
                _ => {
                    let mut c = SnpConfig::new(base, r.settings.order);
                    if let Some(e) = r.settings.epsilon {
                        c.epsilon = e;
                    }
                    identify_snp(&c, &d)?
                }
            };
            let meta = model_meta(r.method, &fitted);
            (fitted.g.clone(), meta, fitted.diagnostics.status)
        }
        _ => {
            let est = estimate(r.method, &r.settings, &r.theta, &d)?;
            let meta = json!({
                "method": r.method.name(),
                "kernel": r.kernel.to_string(),
                "lambda": r.theta.lambda,
                "beta": r.theta.beta,
                "gamma": r.theta.gamma,
                "n_g": r.settings.n_g,
                "status": format!("{:?}", est.status),
            });
            (est.g, meta, est.status)
        }
    };
    check_status(status, &meta.to_string())?;
    let dir = out_dir(out, file)?;
    let g_csv = csv_bytes(|b| write_impulse_response(&g, b))?;
    write_atomic(&dir.join("model.csv"), &g_csv)?;
    write_atomic(&dir.join("model.json"), &json_bytes(&meta))?;
    eprintln!("wrote {}", dir.join("model.csv").display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_tune(
    data: &Option<PathBuf>,
    out: &Option<PathBuf>,
    model: &ModelArgs,
    search: &SearchArgs,
    train_fraction: Option<f64>,
    ranges: [&Option<String>; 4],
    file: &FileConfig,
) -> CmdResult {
    let r = resolve_model(model, file, false)?;
    let t = file.tuning.as_ref();
    let points = t.and_then(|t| t.points).unwrap_or(5);
    let mut space = HyperparamSpace::default_for(r.method, r.kernel, points);
    let [rho_r, lambda_r, beta_r, gamma_r] = ranges;
    if let Some(v) = range_flag(rho_r, "rho")?.or(t.and_then(|t| t.rho)) {
        space.rho = Some(v);
    }
    if let Some(v) = range_flag(lambda_r, "lambda")?.or(t.and_then(|t| t.lambda)) {
        space.lambda = v;
    }
    if let Some(v) = range_flag(beta_r, "beta")?.or(t.and_then(|t| t.beta)) {
        space.beta = v;
    }
    if let Some(v) = range_flag(gamma_r, "gamma")?.or(t.and_then(|t| t.gamma)) {
        space.gamma = Some(v);
    }
    let strategy =
        parse_strategy(search.strategy.as_deref().or(t.and_then(|t| t.strategy.as_deref())).unwrap_or("grid"))?;
    let budget = search.budget.or(t.and_then(|t| t.budget)).unwrap_or(10_000);
    let seed = search.seed.or(file.seed).unwrap_or(0);
    let fraction = train_fraction.or(t.and_then(|t| t.train_fraction)).unwrap_or(0.7);

    let d = read_data(&data_path(data, file)?)?;
    let split = SplitSpec::temporal(d.n_d(), fraction)?;
    let res = tune(r.method, &r.settings, &space, &d, &split, budget, strategy, seed)?;

    let trace = csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        let wrap = |e: csv::Error| PosIdError::Data(format!("CSV write failed: {e}"));
        w.write_record(["rho", "lambda", "beta", "gamma", "score"]).map_err(wrap)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for e in &res.trace {
            w.write_record([
                opt(e.theta.rho),
                e.theta.lambda.to_string(),
                e.theta.beta.to_string(),
                opt(e.theta.gamma),
                e.score.to_string(),
            ])
            .map_err(wrap)?;
        }
        w.flush().map_err(|e| PosIdError::Data(format!("CSV write failed: {e}")))
    })?;
    let best = json!({
        "method": r.method.name(),
        "kernel": r.kernel.to_string(),
        "theta": res.theta,
        "score": res.score,
        "evaluated": res.trace.len(),
    });
    let dir = out_dir(out, file)?;
    write_atomic(&dir.join("trace.csv"), &trace)?;
    write_atomic(&dir.join("best.json"), &json_bytes(&best))?;
    println!("best score {} at {:?}", res.score, res.theta);
    Ok(())
}

fn experiment_config(kernel: KernelKind, search: &SearchArgs, file: &FileConfig) -> Result<ExperimentConfig, Failure> {
    let t = file.tuning.as_ref();
    let mut plan = TuningPlan::default();
    if let Some(s) = search.strategy.as_deref().or(t.and_then(|t| t.strategy.as_deref())) {
        plan.strategy = parse_strategy(s)?;
    }
    if let Some(b) = search.budget.or(t.and_then(|t| t.budget)) {
        plan.budget = b;
    }
    if let Some(p) = t.and_then(|t| t.points) {
        plan.points = p;
    }
    if let Some(f) = t.and_then(|t| t.train_fraction) {
        plan.train_fraction = f;
    }
    let mut settings = MethodSettings { kernel, ..MethodSettings::default() };
    if let Some(v) = file.a_min {
        settings.a_min = v;
    }
    if let Some(v) = file.n_g {
        settings.n_g = v;
    }
    Ok(ExperimentConfig { settings, tuning: plan, ..ExperimentConfig::default() })
}

#[allow(clippy::too_many_arguments)]
fn cmd_montecarlo(
    out: &Option<PathBuf>,
    methods: &Option<String>,
    runs: Option<usize>,
    full: bool,
    n_d: Option<usize>,
    snr: &Option<String>,
    kernel: &Option<String>,
    metric_horizon: Option<usize>,
    search: &SearchArgs,
    file: &FileConfig,
) -> CmdResult {
    let mc = file.montecarlo.as_ref();
    let mut protocol = McProtocol::default();
    if let Some(r) = runs.or(mc.and_then(|m| m.runs)) {
        protocol.runs = r;
    }
    if full {
        protocol.runs = 120;
    }
    if let Some(n) = n_d.or(mc.and_then(|m| m.n_d)) {
        protocol.n_d = n;
    }
    if let Some(s) = snr {
        protocol.snr_levels_db = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| cfg_err(format!("--snr: `{p}` is not a number"))))
            .collect::<Result<_, _>>()?;
    } else if let Some(s) = mc.and_then(|m| m.snr.clone()) {
        protocol.snr_levels_db = s;
    }
    protocol.seed = search.seed.or(file.seed).unwrap_or(0);
    let kernel = parse_kernel(kernel.as_deref().or(file.kernel.as_deref()).unwrap_or("dc"))?;
    let methods = match methods.as_deref() {
        Some(s) => parse_methods(s)?,
        None => match &file.methods {
            Some(v) => v.iter().map(|s| parse_method(s)).collect::<Result<_, _>>()?,
            None => vec![Method::B, Method::C, Method::D, Method::E, Method::G],
        },
    };
    let mut cfg = experiment_config(kernel, search, file)?;
    if let Some(h) = metric_horizon.or(mc.and_then(|m| m.metric_horizon)) {
        cfg.metric_horizon = h;
    }
    let report = run_monte_carlo(&protocol, &methods, &cfg)?;
    let metrics = csv_bytes(|b| report.write_metrics_csv(b))?;
    let fits = csv_bytes(|b| report.write_fits_csv(b))?;
    let dir = out_dir(out, file)?;
    write_atomic(&dir.join("metrics.csv"), &metrics)?;
    write_atomic(&dir.join("fits.csv"), &fits)?;
    for e in &report.entries {
        println!(
            "{:>4} snr {:>5} median fit {:>8.3} mse {:.6} failures {}",
            e.method.name(),
            e.snr_db,
            e.median_fit(),
            e.mse,
            e.failures
        );
    }
    Ok(())
}

fn cmd_heating(
    data: &Option<PathBuf>,
    out: &Option<PathBuf>,
    methods: &Option<String>,
    kernel: &Option<String>,
    search: &SearchArgs,
    file: &FileConfig,
) -> CmdResult {
    let path = data_path(data, file)?;
    let kernel = parse_kernel(kernel.as_deref().or(file.kernel.as_deref()).unwrap_or("tc"))?;
    let methods = match methods.as_deref() {
        Some(s) => parse_methods(s)?,
        None => vec![Method::B, Method::C, Method::D, Method::E, Method::G],
    };
    let cfg = experiment_config(kernel, search, file)?;
    let fits = run_heating(&path, &methods, &cfg, search.seed.or(file.seed).unwrap_or(0))?;
    let bytes = csv_bytes(|b| write_heating_csv(&fits, b))?;
    let dir = out_dir(out, file)?;
    write_atomic(&dir.join("heating_fits.csv"), &bytes)?;
    for f in &fits {
        println!("{:>4} fit {:.2}", f.method.name(), f.fit);
    }
    Ok(())
}

fn cmd_predict(data: &Option<PathBuf>, model: &Path, out: &Option<PathBuf>, file: &FileConfig) -> CmdResult {
    let rec = read_record(&data_path(data, file)?)?;
    let g: ImpulseResponse = read_impulse_response(model)?;
    let start = rec.times[0];
    let record = TimeSeriesData::new(rec.times.clone(), start, rec.inputs.clone(), vec![0.0; rec.len()])?;
    let y_hat = predict_with(&g, &record, &rec.times)?;
    let bytes = csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        let wrap = |e: csv::Error| PosIdError::Data(format!("CSV write failed: {e}"));
        w.write_record(["t", "y_hat", "y"]).map_err(wrap)?;
        for ((t, p), y) in rec.times.iter().zip(&y_hat).zip(&rec.outputs) {
            w.write_record([t.to_string(), p.to_string(), y.map(|v| v.to_string()).unwrap_or_default()])
                .map_err(wrap)?;
        }
        w.flush().map_err(|e| PosIdError::Data(format!("CSV write failed: {e}")))
    })?;
    let dir = out_dir(out, file)?;
    write_atomic(&dir.join("predictions.csv"), &bytes)?;
    Ok(())
}

fn cmd_kernels(
    kernel: &Option<String>,
    beta: Option<f64>,
    gamma: Option<f64>,
    rho: Option<f64>,
    n: usize,
    file: &FileConfig,
) -> CmdResult {
    let kind = parse_kernel(kernel.as_deref().or(file.kernel.as_deref()).unwrap_or("tc"))?;
    let beta = require(beta.or(file.beta), "beta")?;
    let gamma = gamma.or(file.gamma);
    let k = KernelSpec::from_params(kind, beta, gamma)?;
    let b = k.domination_bound();
    println!("kernel         {kind}");
    println!("beta           {beta}");
    if let Some(g) = k.gamma() {
        println!("gamma          {g}");
    }
    println!("domination     |k(s,t)| <= {} * {}^(s+t)", b.c, b.rho_d);
    let gram = k.gram_square(n.max(1));
    let min_eig = gram.clone().symmetric_eigen().eigenvalues.min();
    println!("gram {n}x{n}     min eigenvalue {min_eig:.3e}");
    for s in 0..3 {
        let sec = ImpulseResponse::new((0..2 * n.max(4)).map(|t| k.eval(s, t)).collect())?;
        let rank = hankel_numerical_rank(&sec, n.max(4), 1e-9)?;
        println!("section {s}      hankel rank {rank}");
    }
    if let Some(rho) = rho.or(file.rho) {
        let ok = k.satisfies_decay_coupling(rho);
        println!("rho            {rho} ({})", if ok { "decay coupling holds" } else { "decay coupling violated" });
        if !ok {
            return Err(cfg_err(format!("kernel decay rate {} is not below rho = {rho}", b.rho_d)));
        }
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    let file = config::load(cli.config.as_deref())?;
    if let Some(w) = cli.workers.or(file.workers) {
        if w == 0 {
            return Err(cfg_err("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| cfg_err(format!("cannot start worker pool: {e}")))?;
    }
    match &cli.command {
        Command::Identify { data, out, model } => cmd_identify(data, out, model, &file),
        Command::Tune {
            data,
            out,
            model,
            search,
            train_fraction,
            rho_range,
            lambda_range,
            beta_range,
            gamma_range,
        } => cmd_tune(
            data,
            out,
            model,
            search,
            *train_fraction,
            [rho_range, lambda_range, beta_range, gamma_range],
            &file,
        ),
        Command::Montecarlo { out, methods, runs, full, n_d, snr, kernel, metric_horizon, search } => {
            cmd_montecarlo(out, methods, *runs, *full, *n_d, snr, kernel, *metric_horizon, search, &file)
        }
        Command::Heating { data, out, methods, kernel, search } => {
            cmd_heating(data, out, methods, kernel, search, &file)
        }
        Command::Predict { data, model, out } => cmd_predict(data, model, out, &file),
        Command::Kernels { kernel, beta, gamma, rho, n } => cmd_kernels(kernel, *beta, *gamma, *rho, *n, &file),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                PosIdError::Config(_) => 2,
                PosIdError::Data(_) | PosIdError::Io { .. } | PosIdError::Domain(_) => 3,
                PosIdError::Solver(_) => 4,
            })
        }
        Err(Failure::NotOptimal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(4)
        }
    }
}
