//! Optional TOML settings file; command-line flags take precedence.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use posid::tuning::ParamRange;
use posid::PosIdError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub method: Option<String>,
    pub methods: Option<Vec<String>>,
    pub kernel: Option<String>,
    pub rho: Option<f64>,
    pub lambda: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub a_min: Option<f64>,
    pub delta_m: Option<usize>,
    pub horizon: Option<usize>,
    pub order: Option<usize>,
    pub epsilon: Option<f64>,
    pub n_g: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub tuning: Option<TuningSection>,
    pub montecarlo: Option<McSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningSection {
    pub strategy: Option<String>,
    pub budget: Option<usize>,
    pub train_fraction: Option<f64>,
    pub points: Option<usize>,
    pub rho: Option<ParamRange>,
    pub lambda: Option<ParamRange>,
    pub beta: Option<ParamRange>,
    pub gamma: Option<ParamRange>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub runs: Option<usize>,
    pub n_d: Option<usize>,
    pub snr: Option<Vec<f64>>,
    pub metric_horizon: Option<usize>,
}

pub fn load(path: Option<&Path>) -> Result<FileConfig, PosIdError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text =
        std::fs::read_to_string(path).map_err(|source| PosIdError::Io { path: path.display().to_string(), source })?;
    toml::from_str(&text).map_err(|e| PosIdError::Config(format!("{}: {e}", path.display())))
}

/// `lo:hi[:points[:log]]`, e.g. `1e-6:1e2:9:log`.
pub fn parse_range(s: &str) -> Result<ParamRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if !(2..=4).contains(&parts.len()) {
        return Err(format!("expected lo:hi[:points[:log]], got `{s}`"));
    }
    let num = |p: &str| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number"));
    let lo = num(parts[0])?;
    let hi = num(parts[1])?;
    let points = match parts.get(2) {
        Some(p) => p.trim().parse::<usize>().map_err(|_| format!("`{p}` is not a point count"))?,
        None => 1,
    };
    let log = match parts.get(3).map(|p| p.trim()) {
        None | Some("lin") | Some("linear") => false,
        Some("log") => true,
        Some(other) => return Err(format!("scale must be `lin` or `log`, got `{other}`")),
    };
    Ok(ParamRange { lo, hi, log, points })
}
