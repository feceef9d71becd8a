//! FIR comparison estimators that only use external positivity.

use nalgebra::{DMatrix, DVector};

use crate::error::{PosIdError, Result};
use crate::extensions::{identify_zsr, ZsrConfig};
use crate::kernels::KernelSpec;
use crate::linalg;
use crate::qp::{self, ConvexQP, QPStatus, SolverOptions};
use crate::signals::{convolution_matrix, ImpulseResponse, TimeSeriesData};

/// Default FIR length.
pub const DEFAULT_FIR_LENGTH: usize = 200;

#[derive(Debug, Clone)]
pub enum BaselineKind {
    /// Least squares, then clipped at zero.
    LsProject { n_g: usize },
    /// Least squares over the nonnegative orthant.
    Nnls { n_g: usize },
    /// Kernel-regularized least squares, then clipped at zero.
    KernelRidgeProject { n_g: usize, kernel: KernelSpec, lambda: f64 },
    /// Kernel-regularized least squares over the nonnegative orthant.
    KernelNnls { n_g: usize, kernel: KernelSpec, lambda: f64 },
}

impl BaselineKind {
    pub fn n_g(&self) -> usize {
        match self {
            BaselineKind::LsProject { n_g }
            | BaselineKind::Nnls { n_g }
            | BaselineKind::KernelRidgeProject { n_g, .. }
            | BaselineKind::KernelNnls { n_g, .. } => *n_g,
        }
    }
}

fn project(v: DVector<f64>) -> Result<ImpulseResponse> {
    ImpulseResponse::new(v.iter().map(|x| x.max(0.0)).collect())
}

pub fn run_baseline(kind: &BaselineKind, data: &TimeSeriesData) -> Result<ImpulseResponse> {
    if kind.n_g() == 0 {
        return Err(PosIdError::config("FIR length must be at least 1"));
    }
    match kind {
        BaselineKind::LsProject { n_g } => project(least_squares(data, *n_g)),
        BaselineKind::Nnls { n_g } => nnls(data, *n_g),
        BaselineKind::KernelRidgeProject { n_g, kernel, lambda } => project(kernel_ridge(data, *n_g, kernel, *lambda)?),
        BaselineKind::KernelNnls { n_g, kernel, lambda } => {
            let cfg = ZsrConfig::windowed(kernel, *lambda, *n_g)?;
            identify_zsr(&cfg, data)
        }
    }
}

/// Minimum-norm least-squares FIR (before projection).
pub fn least_squares(data: &TimeSeriesData, n_g: usize) -> DVector<f64> {
    let t = convolution_matrix(data, n_g);
    linalg::lstsq_min_norm(&t, &data.outputs_vector(), 1e-12)
}

/// `K T' (T K T' + lambda I)^-1 y` (before projection).
pub fn kernel_ridge(data: &TimeSeriesData, n_g: usize, kernel: &KernelSpec, lambda: f64) -> Result<DVector<f64>> {
    if !(lambda > 0.0) {
        return Err(PosIdError::config(format!("lambda must be positive, got {lambda}")));
    }
    let t = convolution_matrix(data, n_g);
    let k = kernel.gram_square(n_g);
    let kt = &k * t.transpose();
    let mut s = &t * &kt;
    for i in 0..s.nrows() {
        s[(i, i)] += lambda;
    }
    let s = linalg::symmetrize(&s);
    let y = data.outputs_vector();
    let c = match s.clone().cholesky() {
        Some(ch) => ch.solve(&y),
        None => s.lu().solve(&y).ok_or_else(|| PosIdError::Solver("kernel ridge system is singular".into()))?,
    };
    Ok(kt * c)
}

fn nnls(data: &TimeSeriesData, n_g: usize) -> Result<ImpulseResponse> {
    let t = convolution_matrix(data, n_g);
    let y = data.outputs_vector();
    let p = linalg::symmetrize(&(t.transpose() * &t)) * 2.0;
    let q = -(t.transpose() * &y) * 2.0;
    let problem = ConvexQP::new(p, q)?
        .with_inequalities(DMatrix::identity(n_g, n_g), DVector::zeros(n_g))?
        .with_offset(y.dot(&y));
    let sol = qp::solve(&problem, &SolverOptions::default());
    if sol.status == QPStatus::Infeasible {
        return Err(PosIdError::Solver("nonnegative least squares reported infeasible".into()));
    }
    // the interior iterate can sit a hair below zero
    project(sol.z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(u: Vec<f64>, g: &[f64]) -> TimeSeriesData {
        let y = (0..u.len()).map(|t| (0..=t).map(|s| g.get(s).copied().unwrap_or(0.0) * u[t - s]).sum()).collect();
        TimeSeriesData::at_rest(u, y).unwrap()
    }

    #[test]
    fn exact_recovery_b_and_c() {
        let g = [1.0, 0.5, 0.25, 0.0, 0.1];
        let d = data(vec![1.0, -1.0, 1.0, 1.0, -1.0, 1.0, -1.0, -1.0], &g);
        let b = run_baseline(&BaselineKind::LsProject { n_g: 8 }, &d).unwrap();
        let c = run_baseline(&BaselineKind::Nnls { n_g: 8 }, &d).unwrap();
        for s in 0..8 {
            let want = g.get(s).copied().unwrap_or(0.0);
            assert!((b.values()[s] - want).abs() < 1e-9);
            assert!((c.values()[s] - want).abs() < 1e-7);
        }
    }

    #[test]
    fn ridge_limit_is_least_squares() {
        let g = [1.0, -0.5, 0.25];
        let d = data(vec![1.0, 0.3, -1.0, 0.7, 0.2, -0.4, 1.1, 0.9, -0.6, 0.05], &g);
        let ls = least_squares(&d, 4);
        let kr = kernel_ridge(&d, 4, &KernelSpec::tc(0.8).unwrap(), 1e-10).unwrap();
        assert!((ls - kr).amax() <= 1e-4);
    }

    #[test]
    fn outputs_are_nonnegative() {
        let g = [1.0, -0.8, 0.3];
        let d = data(vec![1.0, -1.0, 1.0, 1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0], &g);
        let k = KernelSpec::tc(0.7).unwrap();
        for kind in [
            BaselineKind::LsProject { n_g: 6 },
            BaselineKind::Nnls { n_g: 6 },
            BaselineKind::KernelRidgeProject { n_g: 6, kernel: k.clone(), lambda: 0.1 },
            BaselineKind::KernelNnls { n_g: 6, kernel: k.clone(), lambda: 0.1 },
        ] {
            let est = run_baseline(&kind, &d).unwrap();
            assert_eq!(est.horizon(), 6);
            assert!(est.values().iter().all(|&v| v >= 0.0), "{kind:?}");
        }
    }
}
