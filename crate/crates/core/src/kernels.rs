//! Stable kernels on the nonnegative integers and their diagonal decay bounds.

use nalgebra::DMatrix;

use crate::error::{PosIdError, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// Tuned/correlated: `beta^max(s,t)`.
    Tc,
    /// Diagonal/correlated: `beta^((s+t)/2) * gamma^|s-t|`.
    Dc,
    /// Stable spline (second order).
    Ss,
    /// Explicit table on `[0, n)^2`, zero elsewhere.
    FiniteSupport,
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            KernelKind::Tc => "tc",
            KernelKind::Dc => "dc",
            KernelKind::Ss => "ss",
            KernelKind::FiniteSupport => "finite",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for KernelKind {
    type Err = PosIdError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tc" => Ok(KernelKind::Tc),
            "dc" => Ok(KernelKind::Dc),
            "ss" => Ok(KernelKind::Ss),
            "finite" | "finite_support" | "fs" => Ok(KernelKind::FiniteSupport),
            other => Err(PosIdError::config(format!("unknown kernel kind `{other}`"))),
        }
    }
}

/// A stable Mercer kernel with validated hyperparameters.
///
/// Values are immutable after construction and evaluation is pure.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    kind: KernelKind,
    beta: f64,
    gamma: f64,
    table: Option<DMatrix<f64>>,
}

/// `k(t,t) <= c * rho_d^(2t)` for all `t`.
///
/// For finite-support kernels the diagonal vanishes beyond the support, so any
/// rate works; this is flagged by `support = Some(n)` with `rho_d = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominationBound {
    pub c: f64,
    pub rho_d: f64,
    pub support: Option<usize>,
}

impl DominationBound {
    pub fn is_finite_support(&self) -> bool {
        self.support.is_some()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&beta) || !beta.is_finite() {
        return Err(PosIdError::config(format!("beta must lie in [0, 1), got {beta}")));
    }
    Ok(())
}

impl KernelSpec {
    pub fn tc(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self { kind: KernelKind::Tc, beta, gamma: 0.0, table: None })
    }

    pub fn dc(beta: f64, gamma: f64) -> Result<Self> {
        check_beta(beta)?;
        if !(-1.0..=1.0).contains(&gamma) || !gamma.is_finite() {
            return Err(PosIdError::config(format!("gamma must lie in [-1, 1], got {gamma}")));
        }
        Ok(Self { kind: KernelKind::Dc, beta, gamma, table: None })
    }

    pub fn ss(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self { kind: KernelKind::Ss, beta, gamma: 0.0, table: None })
    }

    /// Kernel given by a symmetric PSD table on `[0, n)^2`.
    pub fn finite_support(table: DMatrix<f64>) -> Result<Self> {
        if table.nrows() != table.ncols() {
            return Err(PosIdError::config("finite-support table must be square"));
        }
        if table.iter().any(|v| !v.is_finite()) {
            return Err(PosIdError::config("finite-support table has non-finite entries"));
        }
        let scale = table.amax().max(f64::MIN_POSITIVE);
        if linalg::max_abs_asymmetry(&table) > 1e-12 * scale {
            return Err(PosIdError::config("finite-support table must be symmetric"));
        }
        if table.nrows() > 0 && !linalg::is_psd(&table, 1e-10) {
            return Err(PosIdError::config("finite-support table must be positive semidefinite"));
        }
        let table = linalg::symmetrize(&table);
        Ok(Self { kind: KernelKind::FiniteSupport, beta: 0.0, gamma: 0.0, table: Some(table) })
    }

    /// Build a kernel from its kind and hyperparameters (`gamma` only used by DC).
    pub fn from_params(kind: KernelKind, beta: f64, gamma: Option<f64>) -> Result<Self> {
        match kind {
            KernelKind::Tc => Self::tc(beta),
            KernelKind::Ss => Self::ss(beta),
            KernelKind::Dc => Self::dc(beta, gamma.ok_or_else(|| PosIdError::config("DC kernel requires gamma"))?),
            KernelKind::FiniteSupport => Err(PosIdError::config("finite-support kernels are built from a table")),
        }
    }

    /// Restrict this kernel to `[0, n_g)^2`, yielding a finite-support kernel.
    pub fn windowed(&self, n_g: usize) -> Result<Self> {
        let idx: Vec<usize> = (0..n_g).collect();
        Self::finite_support(self.gram(&idx, &idx))
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// DC correlation parameter, `None` for other kinds.
    pub fn gamma(&self) -> Option<f64> {
        (self.kind == KernelKind::Dc).then_some(self.gamma)
    }

    /// Support length of a finite-support kernel.
    pub fn support(&self) -> Option<usize> {
        self.table.as_ref().map(|t| t.nrows())
    }

    pub fn eval(&self, s: usize, t: usize) -> f64 {
        match self.kind {
            KernelKind::Tc => powu(self.beta, s.max(t)),
            KernelKind::Dc => {
                let diff = s.abs_diff(t);
                powu(self.beta.sqrt(), s + t) * powu(self.gamma, diff)
            }
            KernelKind::Ss => {
                let mx = s.max(t);
                powu(self.beta, s + t + mx) / 2.0 - powu(self.beta, 3 * mx) / 6.0
            }
            KernelKind::FiniteSupport => {
                let table = self.table.as_ref().expect("finite-support kernel has a table");
                if s < table.nrows() && t < table.nrows() {
                    table[(s, t)]
                } else {
                    0.0
                }
            }
        }
    }

    /// Matrix of kernel values `[k(r, c)]` for `r` in `rows`, `c` in `cols`.
    pub fn gram(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.eval(rows[i], cols[j]))
    }

    /// Gram matrix on the contiguous index range `0..n`.
    pub fn gram_square(&self, n: usize) -> DMatrix<f64> {
        let idx: Vec<usize> = (0..n).collect();
        let mut g = self.gram(&idx, &idx);
        // exact symmetry regardless of evaluation order
        for i in 0..n {
            for j in 0..i {
                g[(j, i)] = g[(i, j)];
            }
        }
        g
    }

    pub fn domination_bound(&self) -> DominationBound {
        match self.kind {
            KernelKind::Tc | KernelKind::Dc => DominationBound { c: 1.0, rho_d: self.beta.sqrt(), support: None },
            KernelKind::Ss => DominationBound { c: 1.0 / 3.0, rho_d: self.beta.powf(1.5), support: None },
            KernelKind::FiniteSupport => {
                let table = self.table.as_ref().expect("finite-support kernel has a table");
                let c = table.diagonal().iter().cloned().fold(0.0, f64::max);
                DominationBound { c, rho_d: 0.0, support: Some(table.nrows()) }
            }
        }
    }

    /// Whether the kernel diagonal decays strictly faster than `rho^(2t)`.
    pub fn satisfies_decay_coupling(&self, rho: f64) -> bool {
        let b = self.domination_bound();
        b.is_finite_support() || b.rho_d < rho
    }
}

/// `x^n` for a nonnegative integer exponent, with `0^0 = 1`.
pub(crate) fn powu(x: f64, n: usize) -> f64 {
    match i32::try_from(n) {
        Ok(k) => x.powi(k),
        Err(_) => x.powf(n as f64),
    }
}
