//! Impulse response identification for internally positive LTI systems.
//!
//! The estimated impulse response is split into a dominant geometric mode
//! `a * rho^t` and a residual `h` living in a stable reproducing kernel
//! Hilbert space. Nonnegativity of `g = a * rho^t + h` is imposed on a finite
//! constraint horizon `m`, which the representer theorem turns into a finite
//! convex quadratic program. The horizon loop grows `m` until the whole
//! response is nonnegative.
//!
//! Module map:
//!
//! - [`kernels`]: TC / DC / SS / finite-support kernels and their domination bounds.
//! - [`signals`]: input-output records, convolution, Toeplitz and Hankel utilities.
//! - [`gram`]: the matrices of the finite-dimensional programs.
//! - [`qp`]: a dense primal-dual interior-point solver for convex QPs.
//! - [`estimator`]: the constrained kernel estimator and its horizon loop.
//! - [`extensions`]: repeated dominant pole, periodic dominant poles, zero spectral radius.
//! - [`baselines`]: least-squares and kernel FIR comparison methods.
//! - [`tuning`]: hold-out validation and hyperparameter search.
//! - [`experiments`]: Monte Carlo and heating-rig protocols.
//! - [`io`]: CSV ingestion and export.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod extensions;
pub mod gram;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod methods;
pub mod qp;
pub mod signals;
pub mod tuning;

pub use error::{PosIdError, Result};
pub use estimator::{identify, PositiveIdConfig, PositiveIdModel};
pub use kernels::KernelSpec;
pub use signals::{ImpulseResponse, TimeSeriesData};
