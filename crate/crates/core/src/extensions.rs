//! Variants of the estimator for other dominant-pole structures:
//! a repeated real pole, `n` evenly spread poles of equal modulus, and
//! finitely supported (zero spectral radius) responses.

use nalgebra::{DMatrix, DVector};

use crate::error::{PosIdError, Result};
use crate::estimator::{run_loop, solve_at_horizon, ModeFamily, PositiveIdConfig, PositiveIdModel};
use crate::gram::assemble_core;
use crate::kernels::{KernelKind, KernelSpec};
use crate::linalg;
use crate::qp::{ConvexQP, QPStatus, SolverOptions};
use crate::signals::{convolution_matrix, ImpulseResponse, TimeSeriesData};

/// Pole of multiplicity `n` at `rho`.
#[derive(Debug, Clone)]
pub struct NupConfig {
    pub base: PositiveIdConfig,
    pub n: usize,
    /// Weight of the ridge on the lower-order polynomial coefficients.
    pub epsilon: f64,
}

impl NupConfig {
    /// `epsilon` defaults to `1e-4 * lambda`.
    pub fn new(base: PositiveIdConfig, n: usize) -> Self {
        let epsilon = 1e-4 * base.lambda;
        Self { base, n, epsilon }
    }
}

/// `n` simple poles at `rho * exp(2 pi i k / n)`.
#[derive(Debug, Clone)]
pub struct SnpConfig {
    pub base: PositiveIdConfig,
    pub n: usize,
    pub epsilon: f64,
}

impl SnpConfig {
    /// `epsilon` defaults to `1e-4 * lambda`.
    pub fn new(base: PositiveIdConfig, n: usize) -> Self {
        let epsilon = 1e-4 * base.lambda;
        Self { base, n, epsilon }
    }
}

/// Finite impulse response of length `n_g` with a finite-support kernel.
#[derive(Debug, Clone)]
pub struct ZsrConfig {
    pub kernel: KernelSpec,
    pub lambda: f64,
    pub n_g: usize,
    pub solver: SolverOptions,
}

impl ZsrConfig {
    pub fn new(kernel: KernelSpec, lambda: f64, n_g: usize) -> Result<Self> {
        let cfg = Self { kernel, lambda, n_g, solver: SolverOptions::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Window a stable kernel to `[0, n_g)^2`.
    pub fn windowed(kernel: &KernelSpec, lambda: f64, n_g: usize) -> Result<Self> {
        Self::new(kernel.windowed(n_g)?, lambda, n_g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel.kind() != KernelKind::FiniteSupport {
            return Err(PosIdError::config("zero-spectral-radius estimation needs a finite-support kernel"));
        }
        if self.n_g == 0 {
            return Err(PosIdError::config("FIR length must be at least 1"));
        }
        if self.kernel.support() != Some(self.n_g) {
            return Err(PosIdError::config(format!(
                "kernel support {:?} differs from FIR length {}",
                self.kernel.support(),
                self.n_g
            )));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(PosIdError::config(format!("lambda must be positive, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// Repeated dominant pole: `g_t = h_t + rho^t (a t^(n-1) + sum_j a_j t^j)`.
///
/// `model.theta` holds `[a_0, .., a_{n-2}, a]`.
pub fn identify_nup(config: &NupConfig, data: &TimeSeriesData) -> Result<PositiveIdModel> {
    run_loop(&config.base, ModeFamily::Repeated { n: config.n, epsilon: config.epsilon }, data)
}

/// Evenly spread dominant poles: `g_t = h_t + rho^t Re(sum_k (ar_k + i ai_k) w^(k t))`.
///
/// `model.theta` holds `[ar; ai]`.
pub fn identify_snp(config: &SnpConfig, data: &TimeSeriesData) -> Result<PositiveIdModel> {
    run_loop(&config.base, ModeFamily::Periodic { n: config.n, epsilon: config.epsilon }, data)
}

/// Result of a finite-impulse-response fit.
#[derive(Debug, Clone)]
pub struct ZsrFit {
    pub g: ImpulseResponse,
    /// Representer coefficients (`n_D` convolved sections, then `n_g` sections).
    pub x: DVector<f64>,
    pub status: QPStatus,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// Nonnegative FIR estimate with kernel regularization; `g_t = 0` for `t >= n_g`.
pub fn identify_zsr(config: &ZsrConfig, data: &TimeSeriesData) -> Result<ImpulseResponse> {
    Ok(identify_zsr_detailed(config, data)?.g)
}

pub fn identify_zsr_detailed(config: &ZsrConfig, data: &TimeSeriesData) -> Result<ZsrFit> {
    config.validate()?;
    let m = config.n_g - 1;
    // no dominant mode, so the pole value is never used
    let fit = solve_at_horizon(&config.kernel, data, 0.5, config.lambda, 0.0, ModeFamily::None, m, &config.solver)?;
    // active rows come back as roundoff around zero
    let g: Vec<f64> = (0..config.n_g).map(|t| fit.residual.value(t).max(0.0)).collect();
    let n_d = data.n_d();
    let mut x = DVector::zeros(n_d + config.n_g);
    for t in 0..config.n_g {
        x[n_d + t] = fit.residual_weight(t);
    }
    Ok(ZsrFit {
        g: ImpulseResponse::new(g)?,
        x,
        status: fit.qp.status,
        primal_residual: fit.qp.primal_residual,
        dual_residual: fit.qp.dual_residual,
    })
}

/// The coefficient-space program for finite responses:
/// cost `||y - [O L] x||^2 + lambda x' [O L; L' K] x`, rows `[L' K] x >= 0`,
/// over `x` of length `n_D + n_g`.
pub fn build_zsr_qp(config: &ZsrConfig, data: &TimeSeriesData) -> Result<ConvexQP> {
    config.validate()?;
    // rho only enters b and c, which this program does not use
    let mats = assemble_core(&config.kernel, data, 0.5, config.n_g - 1)?;
    let out = mats.output_block();
    let gamma = mats.joint_gram();
    let mut hess = out.transpose() * &out;
    hess += gamma * config.lambda;
    let p = linalg::symmetrize(&hess) * 2.0;
    let q = -(out.transpose() * &mats.y) * 2.0;
    let g = mats.constraint_block();
    let l = DVector::zeros(g.nrows());
    Ok(ConvexQP::new(p, q)?.with_inequalities(g, l)?.with_offset(mats.y.dot(&mats.y)))
}

/// `g_t = sum_i x_i L^{t_i}(k_t) + sum_s x_{n_D+s} k(s,t)` for `t < n_g`.
pub fn zsr_response(x: &DVector<f64>, config: &ZsrConfig, data: &TimeSeriesData) -> Result<ImpulseResponse> {
    let n_d = data.n_d();
    if x.len() != n_d + config.n_g {
        return Err(PosIdError::data("coefficient vector has the wrong length"));
    }
    let w_len = data.window();
    let u = convolution_matrix(data, w_len);
    let folded = u.transpose() * x.rows(0, n_d);
    let mut w = vec![0.0; w_len.max(config.n_g)];
    for s in 0..w_len {
        w[s] += folded[s];
    }
    for s in 0..config.n_g {
        w[s] += x[n_d + s];
    }
    let idx: Vec<usize> = (0..w.len()).collect();
    let cols: Vec<usize> = (0..config.n_g).collect();
    let k = config.kernel.gram(&idx, &cols);
    let g = k.transpose() * DVector::from_vec(w);
    ImpulseResponse::new(g.iter().cloned().collect())
}

/// Direct program over `g` in `R^{n_g}_+`: `||T g - y||^2 + lambda g' K^-1 g`.
///
/// Requires an invertible kernel table; intended for cross-checks on small problems.
pub fn zsr_direct_qp(config: &ZsrConfig, data: &TimeSeriesData) -> Result<ConvexQP> {
    config.validate()?;
    let table = config.kernel.gram_square(config.n_g);
    let kinv =
        table.clone().cholesky().ok_or_else(|| PosIdError::config("kernel table is not positive definite"))?.inverse();
    let t = convolution_matrix(data, config.n_g);
    let y = data.outputs_vector();
    let hess = t.transpose() * &t + kinv * config.lambda;
    let p = linalg::symmetrize(&hess) * 2.0;
    let q = -(t.transpose() * &y) * 2.0;
    Ok(ConvexQP::new(p, q)?
        .with_inequalities(DMatrix::identity(config.n_g, config.n_g), DVector::zeros(config.n_g))?
        .with_offset(y.dot(&y)))
}
