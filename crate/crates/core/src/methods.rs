//! Uniform front end over all estimators, parameterized by a hyperparameter vector.

use serde::{Deserialize, Serialize};

use crate::baselines::{run_baseline, BaselineKind, DEFAULT_FIR_LENGTH};
use crate::error::{PosIdError, Result};
use crate::estimator::{identify, PositiveIdConfig};
use crate::extensions::{identify_nup, identify_snp, identify_zsr_detailed, NupConfig, SnpConfig, ZsrConfig};
use crate::kernels::{KernelKind, KernelSpec};
use crate::qp::QPStatus;
use crate::signals::{ImpulseResponse, TimeSeriesData};

/// Estimator selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Least squares FIR, clipped.
    B,
    /// Nonnegative least squares FIR.
    C,
    /// Kernel-regularized FIR, clipped.
    D,
    /// Kernel-regularized nonnegative FIR.
    E,
    /// Dominant simple pole plus kernel residual.
    G,
    /// Repeated dominant pole.
    Nup,
    /// Evenly spread dominant poles.
    Snp,
    /// Same estimator as `E`, selected by its structural name.
    Zsr,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::B => "b",
            Method::C => "c",
            Method::D => "d",
            Method::E => "e",
            Method::G => "g",
            Method::Nup => "nup",
            Method::Snp => "snp",
            Method::Zsr => "zsr",
        }
    }

    /// Whether the method has a dominant pole hyperparameter.
    pub fn uses_rho(&self) -> bool {
        matches!(self, Method::G | Method::Nup | Method::Snp)
    }

    /// Whether the method has any hyperparameters.
    pub fn is_tunable(&self) -> bool {
        !matches!(self, Method::B | Method::C)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = PosIdError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "b" => Method::B,
            "c" => Method::C,
            "d" => Method::D,
            "e" => Method::E,
            "g" => Method::G,
            "nup" => Method::Nup,
            "snp" => Method::Snp,
            "zsr" => Method::Zsr,
            other => return Err(PosIdError::config(format!("unknown method `{other}`"))),
        })
    }
}

/// Hyperparameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub rho: Option<f64>,
    pub lambda: f64,
    pub beta: f64,
    pub gamma: Option<f64>,
}

impl Theta {
    pub fn kernel(&self, kind: KernelKind) -> Result<KernelSpec> {
        KernelSpec::from_params(kind, self.beta, self.gamma)
    }
}

/// Fixed (non-tuned) settings shared by the estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSettings {
    pub kernel: KernelKind,
    /// FIR length of methods B-E.
    pub n_g: usize,
    pub a_min: f64,
    pub delta_m: usize,
    /// Reconstruction horizon of G/NUP/SNP (defaults to twice the data window).
    pub horizon: Option<usize>,
    /// Mode order of NUP/SNP.
    pub order: usize,
    /// Coefficient ridge of NUP/SNP; defaults to `1e-4 * lambda`.
    pub epsilon: Option<f64>,
}

impl Default for MethodSettings {
    fn default() -> Self {
        Self {
            kernel: KernelKind::Dc,
            n_g: DEFAULT_FIR_LENGTH,
            a_min: 1e-4,
            delta_m: 50,
            horizon: None,
            order: 2,
            epsilon: None,
        }
    }
}

/// An estimated impulse response with its solver status.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub g: ImpulseResponse,
    pub status: QPStatus,
}

fn base_config(settings: &MethodSettings, theta: &Theta) -> Result<PositiveIdConfig> {
    let rho = theta.rho.ok_or_else(|| PosIdError::config("this method needs a dominant pole rho"))?;
    let mut cfg = PositiveIdConfig::new(theta.kernel(settings.kernel)?, rho, theta.lambda)
        .with_a_min(settings.a_min)
        .with_delta_m(settings.delta_m);
    cfg.horizon = settings.horizon;
    Ok(cfg)
}

/// Run `method` with hyperparameters `theta` on `data`.
pub fn estimate(method: Method, settings: &MethodSettings, theta: &Theta, data: &TimeSeriesData) -> Result<Estimate> {
    let n_g = settings.n_g;
    let closed = |g| Ok(Estimate { g, status: QPStatus::Optimal });
    match method {
        Method::B => closed(run_baseline(&BaselineKind::LsProject { n_g }, data)?),
        Method::C => closed(run_baseline(&BaselineKind::Nnls { n_g }, data)?),
        Method::D => {
            let kernel = theta.kernel(settings.kernel)?;
            closed(run_baseline(&BaselineKind::KernelRidgeProject { n_g, kernel, lambda: theta.lambda }, data)?)
        }
        Method::E | Method::Zsr => {
            let cfg = ZsrConfig::windowed(&theta.kernel(settings.kernel)?, theta.lambda, n_g)?;
            let fit = identify_zsr_detailed(&cfg, data)?;
            Ok(Estimate { g: fit.g, status: fit.status })
        }
        Method::G => {
            let m = identify(&base_config(settings, theta)?, data)?;
            Ok(Estimate { status: m.diagnostics.status, g: m.g })
        }
        Method::Nup => {
            let base = base_config(settings, theta)?;
            let mut cfg = NupConfig::new(base, settings.order);
            if let Some(e) = settings.epsilon {
                cfg.epsilon = e;
            }
            let m = identify_nup(&cfg, data)?;
            Ok(Estimate { status: m.diagnostics.status, g: m.g })
        }
        Method::Snp => {
            let base = base_config(settings, theta)?;
            let mut cfg = SnpConfig::new(base, settings.order);
            if let Some(e) = settings.epsilon {
                cfg.epsilon = e;
            }
            let m = identify_snp(&cfg, data)?;
            Ok(Estimate { status: m.diagnostics.status, g: m.g })
        }
    }
}
