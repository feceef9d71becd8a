//! Kernel-regularized impulse response estimation with internal-positivity
//! side information.
//!
//! The response is modelled as `g = f + h` where `f` is a dominant mode built
//! from `rho^t` and `h` lies in the RKHS of a stable kernel. Positivity of `g`
//! is imposed on `t = 0..=m`; the horizon loop enlarges `m` until the whole
//! reconstructed response is nonnegative.
//!
//! The production path solves the program in whitened coordinates: with
//! `h = sum_{s<=T} w_s k_s` and `K_{T+1} = V diag(lam) V'`, the substitution
//! `xi = diag(lam)^(1/2) V' w` turns the RKHS norm into `||xi||^2` and the
//! constraint rows into a well-conditioned dense block. The coefficient form
//! over `(a, x)` is available through [`build_qp`] for cross-checking.

use nalgebra::{DMatrix, DVector};

use crate::error::{PosIdError, Result};
use crate::gram::{assemble_core, assemble_nup, assemble_snp, assemble_snp_outputs, poly_mode, root_angle};
use crate::kernels::{powu, KernelKind, KernelSpec};
use crate::linalg;
use crate::qp::{self, ConvexQP, QPSolution, QPStatus, SolverOptions};
use crate::signals::{convolution_matrix, convolve, dominant_mode, ImpulseResponse, TimeSeriesData};

/// Eigenvalues of the section Gram below this fraction of the largest are dropped.
const EIG_REL_CUT: f64 = 1e-10;

/// Longest horizon on which nonnegativity is verified.
pub const MAX_CHECK_HORIZON: usize = 100_000;

#[derive(Debug, Clone)]
pub struct PositiveIdConfig {
    pub kernel: KernelSpec,
    /// Dominant pole.
    pub rho: f64,
    /// Regularization weight on `||h||^2`.
    pub lambda: f64,
    /// Lower bound on the dominant-mode gain.
    pub a_min: f64,
    /// Horizon increment of the constraint loop.
    pub delta_m: usize,
    /// Reconstruction horizon; defaults to twice the data window.
    pub horizon: Option<usize>,
    pub solver: SolverOptions,
}

impl PositiveIdConfig {
    pub fn new(kernel: KernelSpec, rho: f64, lambda: f64) -> Self {
        Self { kernel, rho, lambda, a_min: 1e-4, delta_m: 50, horizon: None, solver: SolverOptions::default() }
    }

    pub fn with_a_min(mut self, a_min: f64) -> Self {
        self.a_min = a_min;
        self
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn with_delta_m(mut self, delta_m: usize) -> Self {
        self.delta_m = delta_m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(PosIdError::config(format!("rho must lie in (0, 1), got {}", self.rho)));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(PosIdError::config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.a_min > 0.0) || !self.a_min.is_finite() {
            return Err(PosIdError::config(format!("a_min must be positive, got {}", self.a_min)));
        }
        if self.delta_m == 0 {
            return Err(PosIdError::config("delta_m must be at least 1"));
        }
        if self.horizon == Some(0) {
            return Err(PosIdError::config("horizon must be at least 1"));
        }
        if !self.kernel.satisfies_decay_coupling(self.rho) {
            let b = self.kernel.domination_bound();
            return Err(PosIdError::config(format!(
                "kernel decay rate {:.6} is not below rho = {}",
                b.rho_d, self.rho
            )));
        }
        Ok(())
    }

    fn horizon_for(&self, data: &TimeSeriesData) -> usize {
        self.horizon.unwrap_or(2 * data.window())
    }
}

/// Structure of the dominant part `f` of the impulse response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeFamily {
    /// No dominant mode (finitely supported responses).
    None,
    /// `a rho^t`.
    Simple,
    /// `rho^t (a t^(n-1) + sum_{j<n-1} a_j t^j)`, coefficients ordered `[a_0.., a]`.
    Repeated { n: usize, epsilon: f64 },
    /// `rho^t Re(sum_k (ar_k + i ai_k) w^(k t))`, coefficients ordered `[ar; ai]`.
    Periodic { n: usize, epsilon: f64 },
}

impl ModeFamily {
    pub fn n_params(&self) -> usize {
        match *self {
            ModeFamily::None => 0,
            ModeFamily::Simple => 1,
            ModeFamily::Repeated { n, .. } => n,
            ModeFamily::Periodic { n, .. } => 2 * n,
        }
    }

    /// Coefficients `c` such that `f_t = c . theta`.
    pub fn row(&self, rho: f64, t: usize) -> Vec<f64> {
        match *self {
            ModeFamily::None => vec![],
            ModeFamily::Simple => vec![powu(rho, t)],
            ModeFamily::Repeated { n, .. } => (0..n).map(|j| poly_mode(rho, j, t)).collect(),
            ModeFamily::Periodic { n, .. } => {
                let p = powu(rho, t);
                let mut out: Vec<f64> = (0..n).map(|k| p * root_angle(n, t, k).cos()).collect();
                out.extend((0..n).map(|k| -p * root_angle(n, t, k).sin()));
                out
            }
        }
    }

    /// `f_t` for coefficients `theta`.
    pub fn value(&self, rho: f64, theta: &[f64], t: usize) -> f64 {
        self.row(rho, t).iter().zip(theta).map(|(a, b)| a * b).sum()
    }

    /// Imaginary part of the complex periodic mode (zero for the other families).
    pub fn imag_value(&self, rho: f64, theta: &[f64], t: usize) -> f64 {
        match *self {
            ModeFamily::Periodic { n, .. } => {
                let p = powu(rho, t);
                (0..n)
                    .map(|k| {
                        let ang = root_angle(n, t, k);
                        p * (theta[k] * ang.sin() + theta[n + k] * ang.cos())
                    })
                    .sum()
            }
            _ => 0.0,
        }
    }

    /// Limit gain `liminf rho^-t f_t` (dominant-mode strength).
    pub fn gain(&self, theta: &[f64]) -> f64 {
        match *self {
            ModeFamily::None => 0.0,
            ModeFamily::Simple => theta[0],
            ModeFamily::Repeated { n, .. } => theta[n - 1],
            ModeFamily::Periodic { n, .. } => (0..n).map(|t| self.value(1.0, theta, t)).fold(f64::INFINITY, f64::min),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ModeFamily::Repeated { n, epsilon } | ModeFamily::Periodic { n, epsilon } => {
                if n == 0 {
                    return Err(PosIdError::config("mode order n must be at least 1"));
                }
                if !(epsilon > 0.0) || !epsilon.is_finite() {
                    return Err(PosIdError::config(format!("epsilon must be positive, got {epsilon}")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Dominant-mode block of the reduced program.
struct ModeBlock {
    /// `n_D x p` convolved mode columns.
    outputs: DMatrix<f64>,
    /// `p x p` quadratic penalty on the coefficients.
    penalty: DMatrix<f64>,
    ineq: (DMatrix<f64>, DVector<f64>),
    eq: (DMatrix<f64>, DVector<f64>),
}

fn mode_block(family: ModeFamily, data: &TimeSeriesData, rho: f64, a_min: f64) -> Result<ModeBlock> {
    let n_d = data.n_d();
    let empty = |p: usize| (DMatrix::zeros(0, p), DVector::zeros(0));
    Ok(match family {
        ModeFamily::None => {
            ModeBlock { outputs: DMatrix::zeros(n_d, 0), penalty: DMatrix::zeros(0, 0), ineq: empty(0), eq: empty(0) }
        }
        ModeFamily::Simple => {
            let w = data.window();
            let u = convolution_matrix(data, w);
            let f = DVector::from_fn(w, |t, _| powu(rho, t));
            let b = u * f;
            ModeBlock {
                outputs: DMatrix::from_column_slice(n_d, 1, b.as_slice()),
                penalty: DMatrix::zeros(1, 1),
                ineq: (DMatrix::from_element(1, 1, 1.0), DVector::from_element(1, a_min)),
                eq: empty(1),
            }
        }
        ModeFamily::Repeated { n, epsilon } => {
            let nm = assemble_nup(data, rho, n, 0)?;
            let mut penalty = DMatrix::zeros(n, n);
            for j in 0..n - 1 {
                penalty[(j, j)] = epsilon;
            }
            let mut g = DMatrix::zeros(1, n);
            g[(0, n - 1)] = 1.0;
            ModeBlock { outputs: nm.b, penalty, ineq: (g, DVector::from_element(1, a_min)), eq: empty(n) }
        }
        ModeFamily::Periodic { n, epsilon } => {
            let (br, bi) = assemble_snp_outputs(data, rho, n)?;
            let mut outputs = DMatrix::zeros(n_d, 2 * n);
            outputs.view_mut((0, 0), (n_d, n)).copy_from(&br);
            outputs.view_mut((0, n), (n_d, n)).copy_from(&(-bi));
            let v = assemble_snp(rho, n, n)?;
            let mut penalty = DMatrix::zeros(2 * n, 2 * n);
            for j in 1..n {
                penalty[(j, j)] = epsilon;
                penalty[(n + j, n + j)] = epsilon;
            }
            // imaginary part of the mode vanishes: Vr ai + Vi ar = 0
            let mut a = DMatrix::zeros(n, 2 * n);
            a.view_mut((0, 0), (n, n)).copy_from(&v.vi);
            a.view_mut((0, n), (n, n)).copy_from(&v.vr);
            // rho^-t f_t >= a_min over one period: Vr ar - Vi ai >= a_min
            let mut g = DMatrix::zeros(n, 2 * n);
            g.view_mut((0, 0), (n, n)).copy_from(&v.vr);
            g.view_mut((0, n), (n, n)).copy_from(&(-&v.vi));
            ModeBlock { outputs, penalty, ineq: (g, DVector::from_element(n, a_min)), eq: (a, DVector::zeros(n)) }
        }
    })
}

/// Residual part `h = sum_{s<=T} w_s k_s` with exact values on `0..=T`.
#[derive(Debug, Clone)]
pub(crate) struct ResidualExpansion {
    kernel: KernelSpec,
    w: Vec<f64>,
    head: Vec<f64>,
    /// `sum_s w_s beta^s` and `sum_s w_s` (stable-spline tails).
    ss_sums: (f64, f64),
}

impl ResidualExpansion {
    fn new(kernel: &KernelSpec, w: Vec<f64>, head: Vec<f64>) -> Self {
        let beta = kernel.beta();
        let ss_sums = (w.iter().enumerate().map(|(s, v)| v * powu(beta, s)).sum(), w.iter().sum());
        Self { kernel: kernel.clone(), w, head, ss_sums }
    }

    fn span(&self) -> usize {
        self.head.len() - 1
    }

    pub(crate) fn value(&self, t: usize) -> f64 {
        if t < self.head.len() {
            return self.head[t];
        }
        let big_t = self.span();
        let k = &self.kernel;
        match k.kind() {
            KernelKind::Tc => powu(k.beta(), t - big_t) * self.head[big_t],
            KernelKind::Dc => {
                let r = k.beta().sqrt() * k.gamma().unwrap_or(0.0);
                powu(r, t - big_t) * self.head[big_t]
            }
            KernelKind::Ss => {
                let b = k.beta();
                powu(b, 2 * t) * self.ss_sums.0 / 2.0 - powu(b, 3 * t) * self.ss_sums.1 / 6.0
            }
            KernelKind::FiniteSupport => {
                if t >= k.support().unwrap_or(0) {
                    0.0
                } else {
                    self.w.iter().enumerate().map(|(s, v)| v * k.eval(s, t)).sum()
                }
            }
        }
    }
}

/// Outcome of one solve of the reduced program at a fixed horizon.
pub(crate) struct HorizonFit {
    pub theta: Vec<f64>,
    pub residual: ResidualExpansion,
    pub h_norm: f64,
    pub qp: QPSolution,
}

impl HorizonFit {
    /// Weight of section `k_s` in the expansion of `h`.
    pub fn residual_weight(&self, s: usize) -> f64 {
        self.residual.w.get(s).copied().unwrap_or(0.0)
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn solve_at_horizon(
    kernel: &KernelSpec,
    data: &TimeSeriesData,
    rho: f64,
    lambda: f64,
    a_min: f64,
    family: ModeFamily,
    m: usize,
    solver: &SolverOptions,
) -> Result<HorizonFit> {
    let w_len = data.window();
    let big_t = m.max(w_len - 1);
    let gram = kernel.gram_square(big_t + 1);
    let (v, lam) = linalg::psd_range_eigen(&gram, EIG_REL_CUT);
    let r = lam.len();
    let sqrt_lam = lam.map(f64::sqrt);
    let mut fac = v.clone();
    for j in 0..r {
        fac.column_mut(j).scale_mut(sqrt_lam[j]);
    }
    let u = convolution_matrix(data, w_len);
    let ur = &u * fac.rows(0, w_len);

    let block = mode_block(family, data, rho, a_min)?;
    let p_n = block.outputs.ncols();
    let d = p_n + r;
    let y = data.outputs_vector();

    let mut x = DMatrix::zeros(data.n_d(), d);
    x.view_mut((0, 0), (data.n_d(), p_n)).copy_from(&block.outputs);
    x.view_mut((0, p_n), (data.n_d(), r)).copy_from(&ur);
    let mut hess = x.transpose() * &x;
    {
        let mut top = hess.view_mut((0, 0), (p_n, p_n));
        top += &block.penalty;
    }
    for j in p_n..d {
        hess[(j, j)] += lambda;
    }
    let p = hess * 2.0;
    let q = -(x.transpose() * &y) * 2.0;

    // positivity rows t = 0..=m plus mode-specific rows
    let n_ineq = m + 1 + block.ineq.0.nrows();
    let mut g = DMatrix::zeros(n_ineq, d);
    let mut l = DVector::zeros(n_ineq);
    for t in 0..=m {
        for (j, c) in family.row(rho, t).into_iter().enumerate() {
            g[(t, j)] = c;
        }
        g.view_mut((t, p_n), (1, r)).copy_from(&fac.row(t));
    }
    g.view_mut((m + 1, 0), (block.ineq.0.nrows(), p_n)).copy_from(&block.ineq.0);
    l.rows_mut(m + 1, block.ineq.1.len()).copy_from(&block.ineq.1);

    let mut problem = ConvexQP::new(p, q)?.with_inequalities(g, l)?.with_offset(y.dot(&y));
    if block.eq.0.nrows() > 0 {
        let mut a = DMatrix::zeros(block.eq.0.nrows(), d);
        a.view_mut((0, 0), (block.eq.0.nrows(), p_n)).copy_from(&block.eq.0);
        problem = problem.with_equalities(a, block.eq.1.clone())?;
    }
    let sol = qp::solve(&problem, solver);
    if sol.status == QPStatus::Infeasible {
        return Err(PosIdError::Solver(
            "estimation program reported infeasible; check a_min and the mode order".into(),
        ));
    }
    let theta: Vec<f64> = sol.z.rows(0, p_n).iter().cloned().collect();
    let xi = sol.z.rows(p_n, r).into_owned();
    let head = &fac * &xi;
    let w = &v * xi.component_div(&sqrt_lam);
    let residual = ResidualExpansion::new(kernel, w.iter().cloned().collect(), head.iter().cloned().collect());
    Ok(HorizonFit { theta, residual, h_norm: xi.norm(), qp: sol })
}

/// Solver and loop diagnostics attached to a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Computable bound on the horizon that certifies positivity.
    pub m0: usize,
    pub initial_m: usize,
    pub iterations: usize,
    /// The loop stopped at the `m0` cap rather than by the positivity test.
    pub cap_reached: bool,
    /// Length of the range on which positivity was verified.
    pub check_horizon: usize,
    /// Smallest value of `g` on the verified range.
    pub min_g: f64,
    pub status: QPStatus,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub qp_iterations: usize,
    /// RKHS norm of the residual part.
    pub h_norm: f64,
    /// Certified bound on `|h_t|` for every `t` past the reported horizon.
    pub h_tail_bound: f64,
    /// Best constant-gain misfit used for `m0`.
    pub c0: f64,
}

#[derive(Debug, Clone)]
pub struct PositiveIdModel {
    /// Dominant-mode gain (`liminf rho^-t g_t`).
    pub a: f64,
    pub rho: f64,
    pub lambda: f64,
    pub kernel: KernelSpec,
    pub family: ModeFamily,
    /// Dominant-mode coefficients (family specific ordering).
    pub theta: Vec<f64>,
    /// Representer coefficients: `n_D` weights of convolved sections followed by `m + 1` section weights.
    pub x: DVector<f64>,
    pub m: usize,
    pub h: ImpulseResponse,
    pub g: ImpulseResponse,
    pub diagnostics: Diagnostics,
}

impl PositiveIdModel {
    pub fn is_optimal(&self) -> bool {
        self.diagnostics.status == QPStatus::Optimal
    }
}

/// Best constant-gain misfit `C0` and the gain achieving it.
pub(crate) fn constant_gain_misfit(data: &TimeSeriesData, rho: f64, a_min: f64) -> Result<(f64, f64)> {
    let w = data.window();
    let u = convolution_matrix(data, w);
    let b = u * DVector::from_fn(w, |t, _| powu(rho, t));
    let bb = b.dot(&b);
    if !(bb > 0.0) {
        return Err(PosIdError::config("the input does not excite the dominant mode (sum of b_i^2 is zero)"));
    }
    let y = data.outputs_vector();
    let a0 = (y.dot(&b) / bb).max(a_min);
    let c0 = (y - b * a0).norm_squared();
    Ok((c0, a0))
}

/// Horizon bound `m0` beyond which the positivity constraints are implied.
pub fn compute_m0(config: &PositiveIdConfig, data: &TimeSeriesData) -> Result<usize> {
    config.validate()?;
    let (c0, _) = constant_gain_misfit(data, config.rho, config.a_min)?;
    Ok(m0_formula(config, c0))
}

fn m0_formula(config: &PositiveIdConfig, c0: f64) -> usize {
    let bound = config.kernel.domination_bound();
    if let Some(n) = bound.support {
        return n;
    }
    if c0 == 0.0 {
        return 0;
    }
    let num = 0.5 * ((c0 * bound.c).ln() - (config.a_min * config.a_min * config.lambda).ln());
    let den = config.rho.ln() - bound.rho_d.ln();
    let v = (num / den).ceil();
    if v <= 0.0 || v.is_nan() {
        0
    } else if v >= usize::MAX as f64 / 4.0 {
        usize::MAX / 4
    } else {
        v as usize
    }
}

/// Shared constraint-horizon loop for every dominant-mode family.
pub(crate) fn run_loop(
    config: &PositiveIdConfig,
    family: ModeFamily,
    data: &TimeSeriesData,
) -> Result<PositiveIdModel> {
    config.validate()?;
    family.validate()?;
    let (c0, _) = constant_gain_misfit(data, config.rho, config.a_min)?;
    let m0 = m0_formula(config, c0);
    let horizon = config.horizon_for(data);
    let initial_m = data.window();
    let check_horizon = m0.max(horizon).min(MAX_CHECK_HORIZON);

    let mut m = initial_m;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let fit =
            solve_at_horizon(&config.kernel, data, config.rho, config.lambda, config.a_min, family, m, &config.solver)?;
        let gain = family.gain(&fit.theta);
        let tol_neg = 1e-8 * (1.0 + gain.abs());
        let g_at = |t: usize| family.value(config.rho, &fit.theta, t) + fit.residual.value(t);
        let min_g = (0..check_horizon.max(m + 1)).map(g_at).fold(f64::INFINITY, f64::min);
        let positive = min_g >= -tol_neg;
        let at_cap = m >= m0;
        if positive || at_cap {
            return Ok(finish_model(
                config,
                family,
                data,
                fit,
                m,
                Diagnostics {
                    m0,
                    initial_m,
                    iterations,
                    cap_reached: !positive,
                    check_horizon,
                    min_g,
                    status: QPStatus::Optimal,
                    primal_residual: 0.0,
                    dual_residual: 0.0,
                    gap: 0.0,
                    qp_iterations: 0,
                    h_norm: 0.0,
                    h_tail_bound: 0.0,
                    c0,
                },
            ));
        }
        m = (m + config.delta_m).min(m0);
    }
}

fn finish_model(
    config: &PositiveIdConfig,
    family: ModeFamily,
    data: &TimeSeriesData,
    fit: HorizonFit,
    m: usize,
    mut diag: Diagnostics,
) -> PositiveIdModel {
    let horizon = config.horizon_for(data);
    let h: Vec<f64> = (0..horizon).map(|t| fit.residual.value(t)).collect();
    let g: Vec<f64> = (0..horizon).map(|t| family.value(config.rho, &fit.theta, t) + h[t]).collect();
    let bound = config.kernel.domination_bound();
    diag.status = fit.qp.status;
    diag.primal_residual = fit.qp.primal_residual;
    diag.dual_residual = fit.qp.dual_residual;
    diag.gap = fit.qp.gap;
    diag.qp_iterations = fit.qp.iterations;
    diag.h_norm = fit.h_norm;
    diag.h_tail_bound = if bound.is_finite_support() && bound.support.unwrap() <= horizon {
        0.0
    } else {
        bound.c.sqrt() * fit.h_norm * powu(bound.rho_d, horizon)
    };
    let n_d = data.n_d();
    let mut x = DVector::zeros(n_d + m + 1);
    for (s, &v) in fit.residual.w.iter().enumerate().take(m + 1) {
        x[n_d + s] = v;
    }
    PositiveIdModel {
        a: family.gain(&fit.theta),
        rho: config.rho,
        lambda: config.lambda,
        kernel: config.kernel.clone(),
        family,
        theta: fit.theta,
        x,
        m,
        h: ImpulseResponse::new(h).expect("finite residual"),
        g: ImpulseResponse::new(g).expect("finite response"),
        diagnostics: diag,
    }
}

/// Identify a simple-dominant-pole model by the constraint-horizon loop.
pub fn identify(config: &PositiveIdConfig, data: &TimeSeriesData) -> Result<PositiveIdModel> {
    run_loop(config, ModeFamily::Simple, data)
}

/// Solve once with positivity imposed on `t = 0..=m` only (no horizon loop).
///
/// `diagnostics.min_g` reports the smallest value on the reconstruction
/// horizon, which may be negative.
pub fn fit_at_horizon(config: &PositiveIdConfig, data: &TimeSeriesData, m: usize) -> Result<PositiveIdModel> {
    config.validate()?;
    let family = ModeFamily::Simple;
    let (c0, _) = constant_gain_misfit(data, config.rho, config.a_min)?;
    let fit =
        solve_at_horizon(&config.kernel, data, config.rho, config.lambda, config.a_min, family, m, &config.solver)?;
    let horizon = config.horizon_for(data);
    let min_g = (0..horizon.max(m + 1))
        .map(|t| family.value(config.rho, &fit.theta, t) + fit.residual.value(t))
        .fold(f64::INFINITY, f64::min);
    Ok(finish_model(
        config,
        family,
        data,
        fit,
        m,
        Diagnostics {
            m0: m0_formula(config, c0),
            initial_m: m,
            iterations: 1,
            cap_reached: false,
            check_horizon: horizon.max(m + 1),
            min_g,
            status: QPStatus::Optimal,
            primal_residual: 0.0,
            dual_residual: 0.0,
            gap: 0.0,
            qp_iterations: 0,
            h_norm: 0.0,
            h_tail_bound: 0.0,
            c0,
        },
    ))
}

/// Free-run prediction `y_t = sum_s g_s u_{t-s}` at `times`.
pub fn predict(model: &PositiveIdModel, data: &TimeSeriesData, times: &[i64]) -> Result<Vec<f64>> {
    predict_with(&model.g, data, times)
}

/// Convolve any impulse response with the inputs of `data` at `times`.
pub fn predict_with(g: &ImpulseResponse, data: &TimeSeriesData, times: &[i64]) -> Result<Vec<f64>> {
    times.iter().map(|&t| convolve(g, data, t)).collect()
}

/// The program over `(a, x)` in representer coefficients:
///
/// cost `||y - b a - [O L] x||^2 + lambda x' [O L; L' K] x`,
/// rows `[L' K] x + c a >= 0` and `a >= a_min`.
pub fn build_qp(config: &PositiveIdConfig, data: &TimeSeriesData, m: usize) -> Result<ConvexQP> {
    config.validate()?;
    let mats = assemble_core(&config.kernel, data, config.rho, m)?;
    let n_d = data.n_d();
    let nx = n_d + m + 1;
    let d = 1 + nx;
    let out = mats.output_block();
    let gamma = mats.joint_gram();
    let mut design = DMatrix::zeros(n_d, d);
    design.set_column(0, &mats.b);
    design.view_mut((0, 1), (n_d, nx)).copy_from(&out);
    let mut hess = design.transpose() * &design;
    {
        let mut blk = hess.view_mut((1, 1), (nx, nx));
        blk += gamma * config.lambda;
    }
    let p = linalg::symmetrize(&hess) * 2.0;
    let q = -(design.transpose() * &mats.y) * 2.0;

    let mut g = DMatrix::zeros(m + 2, d);
    g.view_mut((0, 0), (m + 1, 1)).copy_from(&mats.c);
    g.view_mut((0, 1), (m + 1, nx)).copy_from(&mats.constraint_block());
    g[(m + 1, 0)] = 1.0;
    let mut l = DVector::zeros(m + 2);
    l[m + 1] = config.a_min;
    Ok(ConvexQP::new(p, q)?.with_inequalities(g, l)?.with_offset(mats.y.dot(&mats.y)))
}

/// `h_t = sum_i x_i L^{t_i}(k_t) + sum_{s<=m} x_{n_D+s} k(s,t)` for `t < horizon`.
pub fn reconstruct_h(
    x: &DVector<f64>,
    kernel: &KernelSpec,
    data: &TimeSeriesData,
    m: usize,
    horizon: usize,
) -> Result<ImpulseResponse> {
    let n_d = data.n_d();
    if x.len() != n_d + m + 1 {
        return Err(PosIdError::data(format!("coefficient vector has length {}, expected {}", x.len(), n_d + m + 1)));
    }
    let w_len = data.window();
    let u = convolution_matrix(data, w_len);
    // fold the convolved sections onto plain section weights
    let mut w = vec![0.0; w_len.max(m + 1)];
    let folded = u.transpose() * x.rows(0, n_d);
    for s in 0..w_len {
        w[s] += folded[s];
    }
    for s in 0..=m {
        w[s] += x[n_d + s];
    }
    let h = (0..horizon.max(1)).map(|t| w.iter().enumerate().map(|(s, v)| v * kernel.eval(s, t)).sum()).collect();
    ImpulseResponse::new(h)
}

/// Impulse response `a rho^t + h_t` from a solution of [`build_qp`].
pub fn response_from_coefficients(
    a: f64,
    x: &DVector<f64>,
    config: &PositiveIdConfig,
    data: &TimeSeriesData,
    m: usize,
    horizon: usize,
) -> Result<ImpulseResponse> {
    let h = reconstruct_h(x, &config.kernel, data, m, horizon)?;
    let f = dominant_mode(config.rho, horizon);
    ImpulseResponse::new(h.values().iter().zip(f.values()).map(|(h, f)| h + a * f).collect())
}
