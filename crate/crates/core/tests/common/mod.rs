#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use posid::kernels::KernelSpec;
use posid::TimeSeriesData;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn binary(n: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// At-rest output of `g` driven by `u`, sample by sample.
pub fn simulate(g: &[f64], u: &[f64]) -> Vec<f64> {
    (0..u.len()).map(|t| (0..=t).map(|s| g.get(s).copied().unwrap_or(0.0) * u[t - s]).sum()).collect()
}

/// Random positive system `g_t = a rho^t + c mu^t cos(w t)` with `|c| mu^t < a rho^t`.
pub fn positive_system(r: &mut ChaCha8Rng, h: usize) -> (f64, Vec<f64>) {
    let rho: f64 = r.random_range(0.7..0.95);
    let a = r.random_range(0.5..2.0);
    let mu: f64 = rho * r.random_range(0.3..0.8);
    let c = a * r.random_range(-0.9..0.9);
    let w = r.random_range(0.0..3.0);
    let g = (0..h).map(|t| a * rho.powi(t as i32) + c * mu.powi(t as i32) * (w * t as f64).cos()).collect();
    (rho, g)
}

/// Noisy at-rest record of length `n` from a random positive system.
pub fn instance(seed: u64, n: usize, noise: f64) -> (f64, Vec<f64>, TimeSeriesData) {
    let mut r = rng(seed);
    let (rho, g) = positive_system(&mut r, n);
    let u = binary(n, &mut r);
    let y: Vec<f64> = simulate(&g, &u).into_iter().map(|v| v + noise * r.random_range(-1.0..1.0)).collect();
    (rho, g, TimeSeriesData::at_rest(u, y).unwrap())
}

/// Exhaustive active-set solution of `min 1/2 z'Pz + q'z` s.t. `G z >= l` (P positive definite).
///
/// Returns the minimizer and objective; `None` when no subset is primal-dual feasible.
pub fn active_set_oracle(
    p: &DMatrix<f64>,
    q: &DVector<f64>,
    g: &DMatrix<f64>,
    l: &DVector<f64>,
) -> Option<(DVector<f64>, f64)> {
    let d = q.len();
    let k = l.len();
    let mut best: Option<(DVector<f64>, f64)> = None;
    for mask in 0u32..(1 << k) {
        let rows: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let na = rows.len();
        if na > d {
            continue;
        }
        let mut kkt = DMatrix::zeros(d + na, d + na);
        kkt.view_mut((0, 0), (d, d)).copy_from(p);
        let mut rhs = DVector::zeros(d + na);
        rhs.rows_mut(0, d).copy_from(&(-q));
        for (j, &i) in rows.iter().enumerate() {
            for c in 0..d {
                kkt[(c, d + j)] = -g[(i, c)];
                kkt[(d + j, c)] = g[(i, c)];
            }
            rhs[d + j] = l[i];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        let z = sol.rows(0, d).into_owned();
        let lam = sol.rows(d, na);
        if lam.iter().any(|&v| v < -1e-10) {
            continue;
        }
        let slack = g * &z - l;
        if slack.iter().any(|&s| s < -1e-10) {
            continue;
        }
        let obj = 0.5 * z.dot(&(p * &z)) + q.dot(&z);
        if best.as_ref().is_none_or(|b| obj < b.1) {
            best = Some((z, obj));
        }
    }
    best
}

/// Random strictly convex QP with `d` variables and `k` inequality rows, feasible at a known point.
pub fn random_qp(r: &mut ChaCha8Rng, d: usize, k: usize) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>, DVector<f64>) {
    let m = DMatrix::from_fn(d, d, |_, _| r.random_range(-1.0..1.0));
    let p = &m * m.transpose() + DMatrix::identity(d, d) * 0.1;
    let q = DVector::from_fn(d, |_, _| r.random_range(-3.0..3.0));
    let g = DMatrix::from_fn(k, d, |_, _| r.random_range(-1.0..1.0));
    let z0 = DVector::from_fn(d, |_, _| r.random_range(-1.0..1.0));
    let l = &g * &z0 - DVector::from_fn(k, |_, _| r.random_range(0.0..1.0));
    (p, q, g, l)
}

/// `O`, `L`, `K` built straight from the double sums over the input record.
pub fn naive_core(kernel: &KernelSpec, data: &TimeSeriesData, m: usize) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = data.n_d();
    let t0 = data.input_start();
    let times = data.sample_times();
    // lags s with u_{t_i - s} possibly nonzero: t_i - s >= t0
    let lag_max = |ti: i64| (ti - t0) as usize;
    let u = |t: i64| data.input_at(t).unwrap_or(0.0);
    let mut o = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for s in 0..=lag_max(times[i]) {
                let ui = u(times[i] - s as i64);
                if ui == 0.0 {
                    continue;
                }
                for r in 0..=lag_max(times[j]) {
                    acc += ui * u(times[j] - r as i64) * kernel.eval(s, r);
                }
            }
            o[(i, j)] = acc;
        }
    }
    let mut l = DMatrix::zeros(n, m + 1);
    for i in 0..n {
        for t in 0..=m {
            l[(i, t)] = (0..=lag_max(times[i])).map(|s| u(times[i] - s as i64) * kernel.eval(s, t)).sum();
        }
    }
    let k = DMatrix::from_fn(m + 1, m + 1, |s, t| kernel.eval(s, t));
    (o, l, k)
}

pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}

/// Unconstrained minimizer in closed form: `c = (O + lambda I)^-1 (y - b a)` with the
/// generalized least-squares gain. Returns `(a, predictions, h_0..=h_m)`.
pub fn unconstrained_closed_form(
    kernel: &KernelSpec,
    data: &TimeSeriesData,
    rho: f64,
    lambda: f64,
    m: usize,
) -> (f64, DVector<f64>, DVector<f64>) {
    let mats = posid::gram::assemble_core(kernel, data, rho, m).unwrap();
    let n = data.n_d();
    let s = &mats.o + DMatrix::identity(n, n) * lambda;
    let chol = s.cholesky().unwrap();
    let sb = chol.solve(&mats.b);
    let sy = chol.solve(&mats.y);
    let a = mats.b.dot(&sy) / mats.b.dot(&sb);
    let c = chol.solve(&(&mats.y - &mats.b * a));
    let pred = &mats.b * a + &mats.o * &c;
    let h = mats.l.transpose() * &c;
    (a, pred, h)
}
