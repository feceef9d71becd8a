//! Dense convex quadratic programming.
//!
//! Problems have the form
//!
//! ```text
//! minimize    1/2 z'Pz + q'z + offset
//! subject to  G z >= l,   A z = r
//! ```
//!
//! and are solved with a Mehrotra predictor-corrector primal-dual interior
//! point method. A converged iterate is polished by solving the equality KKT
//! system on the detected active set, which recovers vertex-accurate
//! solutions whenever the active set is identified correctly.

use nalgebra::{Cholesky, DMatrix, DVector, LU};

use crate::error::{PosIdError, Result};
use crate::linalg::{self, inf_norm};

/// `(z, lambda, nu)`.
type Primal = (DVector<f64>, DVector<f64>, DVector<f64>);

#[derive(Debug, Clone)]
pub struct ConvexQP {
    p: DMatrix<f64>,
    q: DVector<f64>,
    offset: f64,
    g: DMatrix<f64>,
    l: DVector<f64>,
    a: DMatrix<f64>,
    r: DVector<f64>,
}

impl ConvexQP {
    /// Unconstrained problem `1/2 z'Pz + q'z`.
    ///
    /// `P` must be symmetric and positive semidefinite up to `1e-8` relative
    /// tolerance; it is symmetrized on construction.
    pub fn new(p: DMatrix<f64>, q: DVector<f64>) -> Result<Self> {
        let d = q.len();
        if p.nrows() != d || p.ncols() != d {
            return Err(PosIdError::config(format!("P is {}x{} but q has length {d}", p.nrows(), p.ncols())));
        }
        if p.iter().chain(q.iter()).any(|v| !v.is_finite()) {
            return Err(PosIdError::config("QP data has non-finite entries"));
        }
        let scale = p.amax().max(f64::MIN_POSITIVE);
        if linalg::max_abs_asymmetry(&p) > 1e-8 * scale {
            return Err(PosIdError::config("P is not symmetric"));
        }
        let p = linalg::symmetrize(&p);
        if d > 0 && !linalg::is_psd(&p, 1e-8) {
            return Err(PosIdError::config("P is not positive semidefinite"));
        }
        Ok(Self {
            p,
            q,
            offset: 0.0,
            g: DMatrix::zeros(0, d),
            l: DVector::zeros(0),
            a: DMatrix::zeros(0, d),
            r: DVector::zeros(0),
        })
    }

    /// Add rows `G z >= l`.
    pub fn with_inequalities(mut self, g: DMatrix<f64>, l: DVector<f64>) -> Result<Self> {
        if g.ncols() != self.dim() || g.nrows() != l.len() {
            return Err(PosIdError::config("inequality block has inconsistent dimensions"));
        }
        if g.iter().chain(l.iter()).any(|v| !v.is_finite()) {
            return Err(PosIdError::config("inequality block has non-finite entries"));
        }
        self.g = stack(&self.g, &g);
        self.l = stack_vec(&self.l, &l);
        Ok(self)
    }

    /// Add rows `A z = r`.
    pub fn with_equalities(mut self, a: DMatrix<f64>, r: DVector<f64>) -> Result<Self> {
        if a.ncols() != self.dim() || a.nrows() != r.len() {
            return Err(PosIdError::config("equality block has inconsistent dimensions"));
        }
        if a.iter().chain(r.iter()).any(|v| !v.is_finite()) {
            return Err(PosIdError::config("equality block has non-finite entries"));
        }
        self.a = stack(&self.a, &a);
        self.r = stack_vec(&self.r, &r);
        Ok(self)
    }

    /// Constant added to the objective.
    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    /// Problem with all inequality rows removed.
    pub fn without_inequalities(&self) -> Self {
        let mut out = self.clone();
        out.g = DMatrix::zeros(0, self.dim());
        out.l = DVector::zeros(0);
        out
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn n_inequalities(&self) -> usize {
        self.l.len()
    }

    pub fn n_equalities(&self) -> usize {
        self.r.len()
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn q(&self) -> &DVector<f64> {
        &self.q
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn l(&self) -> &DVector<f64> {
        &self.l
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn r(&self) -> &DVector<f64> {
        &self.r
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(&self.p * z)) + self.q.dot(z) + self.offset
    }

    /// Plain-text dump (coordinate format, one block per matrix) for reproducing a solve.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut block = |name: &str, m: &DMatrix<f64>| {
            out.push_str(&format!("%% {name} {} {}\n", m.nrows(), m.ncols()));
            for j in 0..m.ncols() {
                for i in 0..m.nrows() {
                    let v = m[(i, j)];
                    if v != 0.0 {
                        out.push_str(&format!("{} {} {:e}\n", i + 1, j + 1, v));
                    }
                }
            }
        };
        block("P", &self.p);
        block("q", &DMatrix::from_column_slice(self.dim(), 1, self.q.as_slice()));
        block("G", &self.g);
        block("l", &DMatrix::from_column_slice(self.l.len(), 1, self.l.as_slice()));
        block("A", &self.a);
        block("r", &DMatrix::from_column_slice(self.r.len(), 1, self.r.as_slice()));
        out.push_str(&format!("%% offset {:e}\n", self.offset));
        out
    }
}

fn stack(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), top.shape()).copy_from(top);
    out.view_mut((top.nrows(), 0), bottom.shape()).copy_from(bottom);
    out
}

fn stack_vec(top: &DVector<f64>, bottom: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(top.len() + bottom.len(), top.iter().chain(bottom.iter()).cloned())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QPStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct QPSolution {
    pub z: DVector<f64>,
    pub objective: f64,
    pub status: QPStatus,
    /// Worst violation of `G z >= l` and `A z = r`.
    pub primal_residual: f64,
    /// `||P z + q - G'lambda - A'nu||_inf`.
    pub dual_residual: f64,
    /// `sum_i |lambda_i (G z - l)_i|`.
    pub gap: f64,
    /// Multipliers of the inequality rows (nonnegative at optimality).
    pub lambda: DVector<f64>,
    /// Multipliers of the equality rows.
    pub nu: DVector<f64>,
    pub iterations: usize,
    pub polished: bool,
}

impl QPSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == QPStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Primal feasibility and stationarity tolerance (scaled by `1 + ||data||_inf`).
    pub feas_tol: f64,
    /// Complementarity tolerance, relative to `max(1, |objective|)`.
    pub gap_tol: f64,
    pub max_iter: usize,
    /// Refine the converged iterate on its active set.
    pub polish: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { feas_tol: 1e-8, gap_tol: 1e-7, max_iter: 200, polish: true }
    }
}

/// Residuals recomputed from the problem data and a candidate primal-dual point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    pub stationarity: f64,
    pub primal_infeasibility: f64,
    /// Largest negative part of an inequality multiplier.
    pub dual_infeasibility: f64,
    pub complementarity: f64,
}

/// Independent KKT check of a solution.
pub fn kkt_certificate(problem: &ConvexQP, solution: &QPSolution) -> KktReport {
    kkt_at(problem, &solution.z, &solution.lambda, &solution.nu)
}

fn kkt_at(problem: &ConvexQP, z: &DVector<f64>, lambda: &DVector<f64>, nu: &DVector<f64>) -> KktReport {
    let grad = &problem.p * z + &problem.q - problem.g.transpose() * lambda - problem.a.transpose() * nu;
    let slack = &problem.g * z - &problem.l;
    let eq = &problem.a * z - &problem.r;
    let ineq_viol = slack.iter().fold(0.0, |acc: f64, &s| acc.max(-s));
    let primal = ineq_viol.max(inf_norm(&eq));
    let dual_inf = lambda.iter().fold(0.0, |acc: f64, &v| acc.max(-v));
    let comp = lambda.iter().zip(slack.iter()).map(|(a, b)| (a * b).abs()).sum();
    KktReport {
        stationarity: inf_norm(&grad),
        primal_infeasibility: primal,
        dual_infeasibility: dual_inf,
        complementarity: comp,
    }
}

struct Scales {
    primal: f64,
    dual: f64,
}

impl Scales {
    fn of(problem: &ConvexQP) -> Self {
        Self { primal: 1.0 + inf_norm(&problem.l).max(inf_norm(&problem.r)), dual: 1.0 + inf_norm(&problem.q) }
    }
}

fn accept(report: &KktReport, scales: &Scales, obj: f64, opts: &SolverOptions) -> bool {
    report.primal_infeasibility <= opts.feas_tol * scales.primal
        && report.stationarity <= opts.feas_tol * scales.dual
        && report.dual_infeasibility <= opts.feas_tol * scales.dual
        && report.complementarity <= opts.gap_tol * obj.abs().max(1.0)
}

fn finish(
    problem: &ConvexQP,
    z: DVector<f64>,
    lambda: DVector<f64>,
    nu: DVector<f64>,
    status: QPStatus,
    iterations: usize,
    polished: bool,
) -> QPSolution {
    let rep = kkt_at(problem, &z, &lambda, &nu);
    QPSolution {
        objective: problem.objective(&z),
        z,
        status,
        primal_residual: rep.primal_infeasibility,
        dual_residual: rep.stationarity,
        gap: rep.complementarity,
        lambda,
        nu,
        iterations,
        polished,
    }
}

/// Solve a convex QP. Deterministic for identical inputs and options.
pub fn solve(problem: &ConvexQP, options: &SolverOptions) -> QPSolution {
    let scales = Scales::of(problem);
    if problem.n_inequalities() == 0 {
        return solve_equality_only(problem, options, &scales);
    }
    let p = ridged(&problem.p);
    Ipm::new(problem, &p, options, &scales).run()
}

/// Adds a tiny ridge when rounding made `P` slightly indefinite.
fn ridged(p: &DMatrix<f64>) -> DMatrix<f64> {
    let d = p.nrows();
    if d == 0 || Cholesky::new(p.clone()).is_some() {
        return p.clone();
    }
    let (lo, _) = linalg::sym_eig_extremes(p);
    if lo >= 0.0 {
        return p.clone();
    }
    let ridge = 1e-12 * p.trace().abs() / d as f64;
    p + DMatrix::identity(d, d) * (ridge - lo).max(ridge)
}

/// Solve `[P A'; A 0] [z; -nu] = [-q; r]` in the least-squares sense.
fn solve_equality_only(problem: &ConvexQP, options: &SolverOptions, scales: &Scales) -> QPSolution {
    let d = problem.dim();
    let e = problem.n_equalities();
    let mut kkt = DMatrix::zeros(d + e, d + e);
    kkt.view_mut((0, 0), (d, d)).copy_from(&problem.p);
    kkt.view_mut((0, d), (d, e)).copy_from(&problem.a.transpose());
    kkt.view_mut((d, 0), (e, d)).copy_from(&problem.a);
    let mut rhs = DVector::zeros(d + e);
    rhs.rows_mut(0, d).copy_from(&(-&problem.q));
    rhs.rows_mut(d, e).copy_from(&problem.r);
    let sol = linalg::lstsq_min_norm(&kkt, &rhs, 1e-14);
    let z = sol.rows(0, d).into_owned();
    let nu = -sol.rows(d, e).into_owned();
    let lambda = DVector::zeros(0);
    let rep = kkt_at(problem, &z, &lambda, &nu);
    let status = if rep.primal_infeasibility > options.feas_tol * scales.primal {
        QPStatus::Infeasible
    } else if rep.stationarity > options.feas_tol * scales.dual {
        QPStatus::MaxIterations
    } else {
        QPStatus::Optimal
    };
    finish(problem, z, lambda, nu, status, 0, false)
}

/// Factorization of the reduced Newton system.
enum NewtonFactor {
    Chol(Cholesky<f64, nalgebra::Dyn>),
    Lu(LU<f64, nalgebra::Dyn, nalgebra::Dyn>, usize),
}

struct Ipm<'a> {
    problem: &'a ConvexQP,
    p: &'a DMatrix<f64>,
    opts: &'a SolverOptions,
    scales: &'a Scales,
}

struct Iterate {
    z: DVector<f64>,
    s: DVector<f64>,
    lambda: DVector<f64>,
    nu: DVector<f64>,
}

struct Direction {
    dz: DVector<f64>,
    ds: DVector<f64>,
    dl: DVector<f64>,
    dnu: DVector<f64>,
}

impl<'a> Ipm<'a> {
    fn new(problem: &'a ConvexQP, p: &'a DMatrix<f64>, opts: &'a SolverOptions, scales: &'a Scales) -> Self {
        Self { problem, p, opts, scales }
    }

    fn factor(&self, w: &DVector<f64>) -> Option<NewtonFactor> {
        let g = &self.problem.g;
        let d = self.problem.dim();
        let e = self.problem.n_equalities();
        let mut gw = g.clone();
        for (i, mut row) in gw.row_iter_mut().enumerate() {
            row *= w[i];
        }
        let mut m = self.p + g.transpose() * gw;
        let diag_max = m.diagonal().amax().max(f64::MIN_POSITIVE);
        if e == 0 {
            let mut delta = 0.0;
            for _ in 0..12 {
                if let Some(ch) = Cholesky::new(m.clone()) {
                    return Some(NewtonFactor::Chol(ch));
                }
                delta = if delta == 0.0 { 1e-14 * diag_max } else { delta * 10.0 };
                for i in 0..d {
                    m[(i, i)] += delta;
                }
            }
            None
        } else {
            let mut kkt = DMatrix::zeros(d + e, d + e);
            kkt.view_mut((0, 0), (d, d)).copy_from(&m);
            kkt.view_mut((0, d), (d, e)).copy_from(&self.problem.a.transpose());
            kkt.view_mut((d, 0), (e, d)).copy_from(&self.problem.a);
            // tiny regularization keeps the factorization stable when P is singular
            let delta = 1e-14 * diag_max;
            for i in 0..d {
                kkt[(i, i)] += delta;
            }
            for i in d..d + e {
                kkt[(i, i)] -= delta;
            }
            Some(NewtonFactor::Lu(kkt.lu(), d))
        }
    }

    /// Solve the Newton system for residuals `(rd, rp, re, rc)`.
    fn direction(
        &self,
        f: &NewtonFactor,
        it: &Iterate,
        rd: &DVector<f64>,
        rp: &DVector<f64>,
        re: &DVector<f64>,
        rc: &DVector<f64>,
    ) -> Option<Direction> {
        let g = &self.problem.g;
        // t = S^-1 (rc + Lambda rp)
        let t = DVector::from_fn(it.s.len(), |i, _| (rc[i] + it.lambda[i] * rp[i]) / it.s[i]);
        let rhs_z = -rd - g.transpose() * &t;
        let (dz, dnu) = match f {
            NewtonFactor::Chol(ch) => (ch.solve(&rhs_z), DVector::zeros(0)),
            NewtonFactor::Lu(lu, d) => {
                let e = self.problem.n_equalities();
                let mut rhs = DVector::zeros(d + e);
                rhs.rows_mut(0, *d).copy_from(&rhs_z);
                rhs.rows_mut(*d, e).copy_from(&(-re));
                let sol = lu.solve(&rhs)?;
                (sol.rows(0, *d).into_owned(), -sol.rows(*d, e).into_owned())
            }
        };
        if dz.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let ds = g * &dz + rp;
        let dl = DVector::from_fn(it.s.len(), |i, _| -(rc[i] + it.lambda[i] * ds[i]) / it.s[i]);
        Some(Direction { dz, ds, dl, dnu })
    }

    fn initial_point(&self) -> Iterate {
        let pr = self.problem;
        let d = pr.dim();
        let e = pr.n_equalities();
        // least-squares compromise between the cost and the constraint targets
        let m = self.p + pr.g.transpose() * &pr.g;
        let rhs = -&pr.q + pr.g.transpose() * &pr.l;
        let mut kkt = DMatrix::zeros(d + e, d + e);
        kkt.view_mut((0, 0), (d, d)).copy_from(&m);
        kkt.view_mut((0, d), (d, e)).copy_from(&pr.a.transpose());
        kkt.view_mut((d, 0), (e, d)).copy_from(&pr.a);
        let mut full = DVector::zeros(d + e);
        full.rows_mut(0, d).copy_from(&rhs);
        full.rows_mut(d, e).copy_from(&pr.r);
        let sol = linalg::lstsq_min_norm(&kkt, &full, 1e-14);
        let z = sol.rows(0, d).into_owned();
        let mut s = &pr.g * &z - &pr.l;
        let smin = s.min();
        let scale = 1.0 + inf_norm(&s) * 1e-2;
        if smin < scale {
            s.add_scalar_mut(scale - smin);
        }
        let lambda = DVector::from_element(s.len(), 1.0);
        Iterate { z, s, lambda, nu: DVector::zeros(e) }
    }

    fn residuals(&self, it: &Iterate) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let pr = self.problem;
        let rd = self.p * &it.z + &pr.q - pr.g.transpose() * &it.lambda - pr.a.transpose() * &it.nu;
        let rp = &pr.g * &it.z - &it.s - &pr.l;
        let re = &pr.a * &it.z - &pr.r;
        (rd, rp, re)
    }

    fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
        let mut alpha: f64 = 1.0;
        for i in 0..v.len() {
            if dv[i] < 0.0 {
                alpha = alpha.min(-v[i] / dv[i]);
            }
        }
        alpha
    }

    /// Farkas certificate of primal infeasibility from the dual iterate.
    fn infeasibility_certificate(&self, it: &Iterate) -> bool {
        let pr = self.problem;
        let norm = it.lambda.iter().map(|v| v.abs()).sum::<f64>() + it.nu.iter().map(|v| v.abs()).sum::<f64>();
        if !(norm > 0.0) || it.lambda.iter().any(|&v| v < 0.0) {
            return false;
        }
        let lh = &it.lambda / norm;
        let nh = &it.nu / norm;
        let ray = pr.g.transpose() * &lh + pr.a.transpose() * &nh;
        let margin = pr.l.dot(&lh) + pr.r.dot(&nh);
        let data_scale = 1.0 + pr.g.amax().max(pr.a.amax());
        margin > 1e-8 * self.scales.primal && inf_norm(&ray) <= 1e-8 * data_scale
    }

    fn run(&self) -> QPSolution {
        let pr = self.problem;
        let k = pr.n_inequalities() as f64;
        let mut it = self.initial_point();
        let mut iterations = 0;
        let mut status = QPStatus::MaxIterations;

        while iterations < self.opts.max_iter {
            let (rd, rp, re) = self.residuals(&it);
            let mu = it.s.dot(&it.lambda) / k;
            let obj = pr.objective(&it.z);
            let converged = inf_norm(&rd) <= self.opts.feas_tol * self.scales.dual
                && inf_norm(&rp).max(inf_norm(&re)) <= self.opts.feas_tol * self.scales.primal
                && it.s.dot(&it.lambda) <= self.opts.gap_tol * obj.abs().max(1.0) * 1e-2;
            if converged {
                status = QPStatus::Optimal;
                break;
            }
            let big = 1e8 * (1.0 + self.scales.dual);
            if inf_norm(&it.lambda).max(inf_norm(&it.nu)) > big && self.infeasibility_certificate(&it) {
                status = QPStatus::Infeasible;
                break;
            }
            iterations += 1;

            let w = DVector::from_fn(it.s.len(), |i, _| it.lambda[i] / it.s[i]);
            let Some(f) = self.factor(&w) else { break };

            // predictor
            let rc_aff = it.s.component_mul(&it.lambda);
            let Some(aff) = self.direction(&f, &it, &rd, &rp, &re, &rc_aff) else { break };
            let a_p = Self::max_step(&it.s, &aff.ds);
            let a_d = Self::max_step(&it.lambda, &aff.dl);
            let alpha_aff = a_p.min(a_d);
            let mu_aff = (&it.s + &aff.ds * alpha_aff).dot(&(&it.lambda + &aff.dl * alpha_aff)) / k;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            // corrector
            let rc = DVector::from_fn(it.s.len(), |i, _| it.s[i] * it.lambda[i] + aff.ds[i] * aff.dl[i] - sigma * mu);
            let Some(dir) = self.direction(&f, &it, &rd, &rp, &re, &rc) else { break };
            let a_p = Self::max_step(&it.s, &dir.ds);
            let a_d = Self::max_step(&it.lambda, &dir.dl);
            let eta = 0.99;
            let alpha = (eta * a_p.min(a_d)).min(1.0);

            it.z += &dir.dz * alpha;
            it.s += &dir.ds * alpha;
            it.lambda += &dir.dl * alpha;
            it.nu += &dir.dnu * alpha;
            // guard against exact zeros from rounding
            for v in it.s.iter_mut().chain(it.lambda.iter_mut()) {
                if *v <= 0.0 {
                    *v = f64::MIN_POSITIVE.sqrt();
                }
            }
            if !it.z.iter().all(|v| v.is_finite()) {
                break;
            }
        }

        if status != QPStatus::Infeasible && self.infeasibility_certificate(&it) {
            let (_, rp, _) = self.residuals(&it);
            if inf_norm(&rp) > self.opts.feas_tol * self.scales.primal {
                status = QPStatus::Infeasible;
            }
        }
        if status == QPStatus::Infeasible {
            return finish(pr, it.z, it.lambda, it.nu, status, iterations, false);
        }

        if self.opts.polish {
            if let Some((z, lambda, nu)) = self.polish(&it) {
                let rep = kkt_at(pr, &z, &lambda, &nu);
                let obj = pr.objective(&z);
                if accept(&rep, self.scales, obj, self.opts) {
                    return finish(pr, z, lambda, nu, QPStatus::Optimal, iterations, true);
                }
            }
        }
        let rep = kkt_at(pr, &it.z, &it.lambda, &it.nu);
        let obj = pr.objective(&it.z);
        let status =
            if accept(&rep, self.scales, obj, self.opts) { QPStatus::Optimal } else { QPStatus::MaxIterations };
        finish(pr, it.z, it.lambda, it.nu, status, iterations, false)
    }

    /// Solve the equality KKT system on the active set `{lambda_i > s_i}`.
    fn polish(&self, it: &Iterate) -> Option<Primal> {
        let pr = self.problem;
        let d = pr.dim();
        let e = pr.n_equalities();
        let active: Vec<usize> = (0..it.s.len()).filter(|&i| it.lambda[i] > it.s[i]).collect();
        let na = active.len();
        let n = d + na + e;
        let mut kkt = DMatrix::zeros(n, n);
        kkt.view_mut((0, 0), (d, d)).copy_from(&pr.p);
        let mut rhs = DVector::zeros(n);
        rhs.rows_mut(0, d).copy_from(&(-&pr.q));
        for (row, &i) in active.iter().enumerate() {
            for j in 0..d {
                kkt[(d + row, j)] = pr.g[(i, j)];
                kkt[(j, d + row)] = pr.g[(i, j)];
            }
            rhs[d + row] = pr.l[i];
        }
        kkt.view_mut((d + na, 0), (e, d)).copy_from(&pr.a);
        kkt.view_mut((0, d + na), (d, e)).copy_from(&pr.a.transpose());
        rhs.rows_mut(d + na, e).copy_from(&pr.r);

        let candidates = [kkt.clone().lu().solve(&rhs), Some(linalg::lstsq_min_norm(&kkt, &rhs, 1e-14))];
        let mut best: Option<(Primal, f64)> = None;
        for sol in candidates.into_iter().flatten() {
            if sol.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let z = sol.rows(0, d).into_owned();
            let mut lambda = DVector::zeros(it.s.len());
            for (row, &i) in active.iter().enumerate() {
                lambda[i] = -sol[d + row];
            }
            let nu = -sol.rows(d + na, e).into_owned();
            let rep = kkt_at(pr, &z, &lambda, &nu);
            let score = rep.primal_infeasibility / self.scales.primal
                + rep.stationarity / self.scales.dual
                + rep.dual_infeasibility / self.scales.dual;
            if best.as_ref().is_none_or(|b| score < b.1) {
                best = Some(((z, lambda, nu), score));
            }
            if score <= 1e-2 * self.opts.feas_tol {
                break;
            }
        }
        best.map(|(p, _)| p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn unconstrained_quadratic() {
        // ||z - 1||^2 = z'z - 2 1'z + 3
        let qp = ConvexQP::new(DMatrix::identity(3, 3) * 2.0, DVector::from_element(3, -2.0)).unwrap().with_offset(3.0);
        let s = solve(&qp, &opts());
        assert!(s.is_optimal());
        assert!((s.z.add_scalar(-1.0)).amax() < 1e-12);
        assert!(s.objective.abs() < 1e-12);
    }

    #[test]
    fn active_lower_bound() {
        let qp = ConvexQP::new(DMatrix::from_element(1, 1, 2.0), DVector::zeros(1))
            .unwrap()
            .with_inequalities(DMatrix::from_element(1, 1, 1.0), DVector::from_element(1, 2.0))
            .unwrap();
        let s = solve(&qp, &opts());
        assert!(s.is_optimal());
        assert!((s.z[0] - 2.0).abs() < 1e-10);
        assert!((s.objective - 4.0).abs() < 1e-9);
        let rep = kkt_certificate(&qp, &s);
        assert!(rep.stationarity <= 1e-10 && rep.primal_infeasibility <= 1e-10);
        assert!(rep.complementarity <= 1e-10);
    }

    #[test]
    fn detects_infeasibility() {
        // z >= 1 and -z >= 0
        let g = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let qp = ConvexQP::new(DMatrix::from_element(1, 1, 1.0), DVector::zeros(1))
            .unwrap()
            .with_inequalities(g, DVector::from_vec(vec![1.0, 0.0]))
            .unwrap();
        assert_eq!(solve(&qp, &opts()).status, QPStatus::Infeasible);
    }

    #[test]
    fn inconsistent_equalities_are_infeasible() {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let qp = ConvexQP::new(DMatrix::from_element(1, 1, 1.0), DVector::zeros(1))
            .unwrap()
            .with_equalities(a, DVector::from_vec(vec![0.0, 1.0]))
            .unwrap();
        assert_eq!(solve(&qp, &opts()).status, QPStatus::Infeasible);
    }

    #[test]
    fn rejects_indefinite() {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(ConvexQP::new(p, DVector::zeros(2)).is_err());
    }

    #[test]
    fn perturbed_point_has_stationarity_residual() {
        let qp = ConvexQP::new(DMatrix::from_element(1, 1, 2.0), DVector::zeros(1))
            .unwrap()
            .with_inequalities(DMatrix::from_element(1, 1, 1.0), DVector::from_element(1, 2.0))
            .unwrap();
        let mut s = solve(&qp, &opts());
        s.z[0] += 1e-3;
        assert!(kkt_certificate(&qp, &s).stationarity > 1e-4);
    }

    #[test]
    fn mixed_constraints() {
        // min (z0-1)^2 + (z1-2)^2 + z2^2, z0 + z1 + z2 = 1, z >= 0
        let p = DMatrix::identity(3, 3) * 2.0;
        let q = DVector::from_vec(vec![-2.0, -4.0, 0.0]);
        let qp = ConvexQP::new(p, q)
            .unwrap()
            .with_inequalities(DMatrix::identity(3, 3), DVector::zeros(3))
            .unwrap()
            .with_equalities(DMatrix::from_element(1, 3, 1.0), DVector::from_element(1, 1.0))
            .unwrap();
        let s = solve(&qp, &opts());
        assert!(s.is_optimal(), "{:?}", s.status);
        assert!((s.z[0]).abs() < 1e-9 && (s.z[1] - 1.0).abs() < 1e-9 && s.z[2].abs() < 1e-9, "{}", s.z);
    }
}
