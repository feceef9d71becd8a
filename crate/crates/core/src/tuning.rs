//! Hold-out validation and hyperparameter search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PosIdError, Result};
use crate::estimator::predict_with;
use crate::kernels::KernelKind;
use crate::methods::{estimate, Method, MethodSettings, Theta};
use crate::qp::QPStatus;
use crate::signals::TimeSeriesData;

/// Closed interval, sampled linearly or logarithmically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub log: bool,
    /// Grid points along this axis.
    #[serde(default = "one")]
    pub points: usize,
}

fn one() -> usize {
    1
}

impl ParamRange {
    fn unit_coord(&self, v: f64) -> f64 {
        if self.lo == self.hi {
            0.0
        } else if self.log {
            (v.ln() - self.lo.ln()) / (self.hi.ln() - self.lo.ln())
        } else {
            (v - self.lo) / (self.hi - self.lo)
        }
    }

    fn at_unit(&self, f: f64) -> f64 {
        let f = f.clamp(0.0, 1.0);
        if self.log {
            (self.lo.ln() + f * (self.hi.ln() - self.lo.ln())).exp()
        } else {
            self.lo + f * (self.hi - self.lo)
        }
    }

    pub fn linear(lo: f64, hi: f64, points: usize) -> Self {
        Self { lo, hi, log: false, points }
    }

    pub fn log(lo: f64, hi: f64, points: usize) -> Self {
        Self { lo, hi, log: true, points }
    }

    pub fn fixed(v: f64) -> Self {
        Self { lo: v, hi: v, log: false, points: 1 }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !self.lo.is_finite() || !self.hi.is_finite() || self.lo > self.hi {
            return Err(PosIdError::config(format!("{name} range [{}, {}] is empty", self.lo, self.hi)));
        }
        if self.log && self.lo <= 0.0 {
            return Err(PosIdError::config(format!("{name} log range must be positive")));
        }
        if self.points == 0 {
            return Err(PosIdError::config(format!("{name} grid needs at least one point")));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        if self.points == 1 || self.lo == self.hi {
            return vec![if self.log { (self.lo * self.hi).sqrt() } else { 0.5 * (self.lo + self.hi) }];
        }
        let n = self.points - 1;
        (0..=n).map(|i| self.at_unit(i as f64 / n as f64)).collect()
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            return self.lo;
        }
        self.at_unit(rng.random())
    }
}

/// Search box for `[rho, lambda, beta, gamma]`.
///
/// `rho` is ignored by methods without a dominant pole and `gamma` by kernels
/// other than DC. Candidates violating the kernel/pole decay coupling are
/// discarded before evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperparamSpace {
    pub rho: Option<ParamRange>,
    pub lambda: ParamRange,
    pub beta: ParamRange,
    pub gamma: Option<ParamRange>,
}

impl HyperparamSpace {
    /// A reasonable box for `method` with a `kernel` prior, `points` per axis.
    pub fn default_for(method: Method, kernel: KernelKind, points: usize) -> Self {
        Self {
            rho: method.uses_rho().then(|| ParamRange::linear(0.8, 0.995, points)),
            lambda: ParamRange::log(1e-9, 1e2, points),
            beta: ParamRange::linear(0.5, 0.98, points),
            gamma: (kernel == KernelKind::Dc).then(|| ParamRange::linear(0.5, 0.98, points)),
        }
    }

    pub fn validate(&self, method: Method, kernel: KernelKind) -> Result<()> {
        if method.uses_rho() {
            let rho = self.rho.ok_or_else(|| PosIdError::config(format!("method {method} needs a rho range")))?;
            rho.validate("rho")?;
            if rho.lo <= 0.0 || rho.hi >= 1.0 {
                return Err(PosIdError::config("rho range must lie inside (0, 1)"));
            }
        }
        self.lambda.validate("lambda")?;
        if self.lambda.lo <= 0.0 {
            return Err(PosIdError::config("lambda range must be positive"));
        }
        self.beta.validate("beta")?;
        if self.beta.lo < 0.0 || self.beta.hi >= 1.0 {
            return Err(PosIdError::config("beta range must lie inside [0, 1)"));
        }
        if kernel == KernelKind::Dc {
            let g = self.gamma.ok_or_else(|| PosIdError::config("DC kernel needs a gamma range"))?;
            g.validate("gamma")?;
            if g.lo < -1.0 || g.hi > 1.0 {
                return Err(PosIdError::config("gamma range must lie inside [-1, 1]"));
            }
        }
        Ok(())
    }

    fn theta_from(&self, method: Method, kernel: KernelKind, rho: f64, lambda: f64, beta: f64, gamma: f64) -> Theta {
        Theta {
            rho: method.uses_rho().then_some(rho),
            lambda,
            beta,
            gamma: (kernel == KernelKind::Dc).then_some(gamma),
        }
    }

    fn axis(r: Option<ParamRange>, used: bool) -> Vec<f64> {
        match r {
            Some(r) if used => r.grid(),
            _ => vec![f64::NAN],
        }
    }

    /// Full cartesian grid, ordered with `gamma` varying fastest.
    pub fn grid(&self, method: Method, kernel: KernelKind) -> Vec<Theta> {
        let rhos = Self::axis(self.rho, method.uses_rho());
        let gammas = Self::axis(self.gamma, kernel == KernelKind::Dc);
        let mut out = Vec::new();
        for &rho in &rhos {
            for &lambda in &self.lambda.grid() {
                for &beta in &self.beta.grid() {
                    for &gamma in &gammas {
                        out.push(self.theta_from(method, kernel, rho, lambda, beta, gamma));
                    }
                }
            }
        }
        out
    }

    fn sample<R: Rng>(&self, method: Method, kernel: KernelKind, rng: &mut R) -> Theta {
        let rho = self.rho.map_or(f64::NAN, |r| r.sample(rng));
        let lambda = self.lambda.sample(rng);
        let beta = self.beta.sample(rng);
        let gamma = self.gamma.map_or(f64::NAN, |r| r.sample(rng));
        self.theta_from(method, kernel, rho, lambda, beta, gamma)
    }
}

/// Whether `theta` builds a valid kernel satisfying the decay coupling with `rho`.
pub fn is_admissible(theta: &Theta, kernel: KernelKind) -> bool {
    match theta.kernel(kernel) {
        Ok(k) => theta.rho.is_none_or(|rho| k.satisfies_decay_coupling(rho)),
        Err(_) => false,
    }
}

/// Disjoint training and validation sample indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    train: Vec<usize>,
    validation: Vec<usize>,
}

impl SplitSpec {
    pub fn new(mut train: Vec<usize>, mut validation: Vec<usize>, n_d: usize) -> Result<Self> {
        train.sort_unstable();
        train.dedup();
        validation.sort_unstable();
        validation.dedup();
        if train.is_empty() || validation.is_empty() {
            return Err(PosIdError::config("training and validation sets must be nonempty"));
        }
        if train.iter().chain(&validation).any(|&i| i >= n_d) {
            return Err(PosIdError::config(format!("split index out of range for {n_d} samples")));
        }
        if train.iter().any(|i| validation.binary_search(i).is_ok()) {
            return Err(PosIdError::config("training and validation sets overlap"));
        }
        Ok(Self { train, validation })
    }

    /// First `fraction` of the samples for training, the rest for validation.
    pub fn temporal(n_d: usize, fraction: f64) -> Result<Self> {
        if n_d < 2 {
            return Err(PosIdError::config("a split needs at least two samples"));
        }
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(PosIdError::config(format!("split fraction must lie in (0, 1), got {fraction}")));
        }
        let n_t = ((fraction * n_d as f64).round() as usize).clamp(1, n_d - 1);
        Self::new((0..n_t).collect(), (n_t..n_d).collect(), n_d)
    }

    /// The 70/30 temporal split.
    pub fn default_for(n_d: usize) -> Result<Self> {
        Self::temporal(n_d, 0.7)
    }

    pub fn train(&self) -> &[usize] {
        &self.train
    }

    pub fn validation(&self) -> &[usize] {
        &self.validation
    }
}

/// One evaluated candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub theta: Theta,
    /// Mean squared validation error, `+inf` when the fit failed.
    pub score: f64,
    pub diagnostic: Option<String>,
}

/// Fit on the training samples and score predictions on the validation samples.
pub fn validation_score(
    method: Method,
    settings: &MethodSettings,
    theta: &Theta,
    data: &TimeSeriesData,
    split: &SplitSpec,
) -> Evaluation {
    let fail = |msg: String| Evaluation { theta: *theta, score: f64::INFINITY, diagnostic: Some(msg) };
    if split.train.iter().chain(&split.validation).any(|&i| i >= data.n_d()) {
        return fail("split does not match the data".into());
    }
    let train = match data.restrict(&split.train) {
        Ok(d) => d,
        Err(e) => return fail(e.to_string()),
    };
    let est = match estimate(method, settings, theta, &train) {
        Ok(e) => e,
        Err(e) => return fail(e.to_string()),
    };
    let times: Vec<i64> = split.validation.iter().map(|&i| data.sample_times()[i]).collect();
    let pred = match predict_with(&est.g, data, &times) {
        Ok(p) => p,
        Err(e) => return fail(e.to_string()),
    };
    let ys = data.outputs();
    let sse: f64 = split.validation.iter().zip(&pred).map(|(&i, p)| (ys[i] - p).powi(2)).sum();
    let diagnostic = (est.status != QPStatus::Optimal).then(|| format!("solver status {:?}", est.status));
    Evaluation { theta: *theta, score: sse / split.validation.len() as f64, diagnostic }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchStrategy {
    /// Every admissible point of the grid (`budget` caps the count).
    Grid,
    /// `budget` admissible draws, uniform on each (log) range.
    Random,
    /// Half the budget on random draws, the rest on a shrinking compass
    /// search around the incumbent.
    Adaptive,
}

#[derive(Debug, Clone)]
pub struct TuneResult {
    pub theta: Theta,
    pub score: f64,
    /// Every evaluated candidate, in candidate order.
    pub trace: Vec<Evaluation>,
}

fn random_candidates(
    method: Method,
    kernel: KernelKind,
    space: &HyperparamSpace,
    budget: usize,
    seed: u64,
) -> Vec<Theta> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(budget);
    // rejection sampling; give up on a (nearly) empty admissible set
    let max_draws = budget.saturating_mul(1000).max(1000);
    for _ in 0..max_draws {
        if out.len() == budget {
            break;
        }
        let t = space.sample(method, kernel, &mut rng);
        if is_admissible(&t, kernel) {
            out.push(t);
        }
    }
    out
}

/// Axes of `space` that vary for `method`, as (range, getter, setter).
type Axis = (ParamRange, fn(&Theta) -> f64, fn(&mut Theta, f64));

fn free_axes(method: Method, kernel: KernelKind, space: &HyperparamSpace) -> Vec<Axis> {
    let mut axes: Vec<Axis> = Vec::new();
    if let (Some(r), true) = (space.rho, method.uses_rho()) {
        axes.push((r, |t| t.rho.unwrap_or(f64::NAN), |t, v| t.rho = Some(v)));
    }
    axes.push((space.lambda, |t| t.lambda, |t, v| t.lambda = v));
    axes.push((space.beta, |t| t.beta, |t, v| t.beta = v));
    if let (Some(r), true) = (space.gamma, kernel == KernelKind::Dc) {
        axes.push((r, |t| t.gamma.unwrap_or(f64::NAN), |t, v| t.gamma = Some(v)));
    }
    axes.retain(|a| a.0.lo < a.0.hi);
    axes
}

fn score_all(
    method: Method,
    settings: &MethodSettings,
    cands: &[Theta],
    data: &TimeSeriesData,
    split: &SplitSpec,
) -> Vec<Evaluation> {
    cands.par_iter().map(|t| validation_score(method, settings, t, data, split)).collect()
}

fn argmin(trace: &[Evaluation]) -> usize {
    let mut best = 0;
    for (i, e) in trace.iter().enumerate() {
        if e.score < trace[best].score {
            best = i;
        }
    }
    best
}

#[allow(clippy::too_many_arguments)]
fn adaptive_search(
    method: Method,
    settings: &MethodSettings,
    space: &HyperparamSpace,
    data: &TimeSeriesData,
    split: &SplitSpec,
    budget: usize,
    seed: u64,
) -> Vec<Evaluation> {
    let kernel = settings.kernel;
    let start = random_candidates(method, kernel, space, budget.div_ceil(2), seed);
    let mut trace = score_all(method, settings, &start, data, split);
    if trace.is_empty() {
        return trace;
    }
    let axes = free_axes(method, kernel, space);
    let mut step = 0.125;
    while trace.len() < budget && step > 1e-4 && !axes.is_empty() {
        let best = trace[argmin(&trace)].clone();
        let mut probes = Vec::new();
        for (range, get, set) in &axes {
            let u = range.unit_coord(get(&best.theta));
            for du in [-step, step] {
                let mut t = best.theta;
                set(&mut t, range.at_unit(u + du));
                let fresh = is_admissible(&t, kernel) && !probes.contains(&t) && !trace.iter().any(|e| e.theta == t);
                if fresh {
                    probes.push(t);
                }
            }
        }
        probes.truncate(budget - trace.len());
        if probes.is_empty() {
            step /= 2.0;
            continue;
        }
        let evals = score_all(method, settings, &probes, data, split);
        let improved = evals.iter().any(|e| e.score < best.score);
        trace.extend(evals);
        if !improved {
            step /= 2.0;
        }
    }
    trace
}

fn candidates(
    method: Method,
    kernel: KernelKind,
    space: &HyperparamSpace,
    budget: usize,
    strategy: SearchStrategy,
    seed: u64,
) -> Vec<Theta> {
    match strategy {
        SearchStrategy::Grid => {
            space.grid(method, kernel).into_iter().filter(|t| is_admissible(t, kernel)).take(budget).collect()
        }
        SearchStrategy::Random | SearchStrategy::Adaptive => random_candidates(method, kernel, space, budget, seed),
    }
}

/// Select the candidate with the lowest validation score.
///
/// Ties go to the earliest candidate. Evaluations run in parallel on the
/// current rayon pool.
#[allow(clippy::too_many_arguments)]
pub fn tune(
    method: Method,
    settings: &MethodSettings,
    space: &HyperparamSpace,
    data: &TimeSeriesData,
    split: &SplitSpec,
    budget: usize,
    strategy: SearchStrategy,
    seed: u64,
) -> Result<TuneResult> {
    if budget == 0 {
        return Err(PosIdError::config("tuning budget must be at least 1"));
    }
    if !method.is_tunable() {
        return Err(PosIdError::config(format!("method {method} has no hyperparameters")));
    }
    space.validate(method, settings.kernel)?;
    let trace = match strategy {
        SearchStrategy::Adaptive => adaptive_search(method, settings, space, data, split, budget, seed),
        _ => score_all(
            method,
            settings,
            &candidates(method, settings.kernel, space, budget, strategy, seed),
            data,
            split,
        ),
    };
    if trace.is_empty() {
        return Err(PosIdError::config("no candidate satisfies the kernel decay coupling with rho"));
    }
    let best = argmin(&trace);
    Ok(TuneResult { theta: trace[best].theta, score: trace[best].score, trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let r = ParamRange::log(1e-6, 1e2, 9);
        let g = r.grid();
        assert_eq!(g.len(), 9);
        assert!((g[0] - 1e-6).abs() < 1e-18);
        assert!((g[8] - 1e2).abs() < 1e-10);
        assert!((g[6] - 1.0).abs() < 1e-12);
        assert_eq!(ParamRange::fixed(0.3).grid(), vec![0.3]);
    }

    #[test]
    fn temporal_split_sizes() {
        let s = SplitSpec::default_for(200).unwrap();
        assert_eq!(s.train().len(), 140);
        assert_eq!(s.validation().len(), 60);
        assert_eq!(s.validation()[0], 140);
        assert!(SplitSpec::new(vec![0, 1], vec![1, 2], 3).is_err());
        assert!(SplitSpec::new(vec![], vec![1], 3).is_err());
    }

    #[test]
    fn coupling_filter() {
        let space = HyperparamSpace {
            rho: Some(ParamRange::linear(0.5, 0.9, 3)),
            lambda: ParamRange::fixed(1.0),
            beta: ParamRange::linear(0.2, 0.9, 3),
            gamma: None,
        };
        let c = candidates(Method::G, KernelKind::Tc, &space, 100, SearchStrategy::Grid, 0);
        assert!(c.iter().all(|t| t.beta.sqrt() < t.rho.unwrap()));
        assert!(c.len() < 9);
        let r = candidates(Method::G, KernelKind::Tc, &space, 20, SearchStrategy::Random, 7);
        assert_eq!(r.len(), 20);
        assert!(r.iter().all(|t| t.beta.sqrt() < t.rho.unwrap()));
    }
}
