//! Matrices of the finite-dimensional estimation programs.
//!
//! With inputs vanishing before `t_start`, every convolution of a kernel
//! section involves only the lags `0..=t_i - t_start`, so the sums below are
//! exact finite sums rather than truncations.

use nalgebra::{DMatrix, DVector};

use crate::error::{PosIdError, Result};
use crate::kernels::{powu, KernelSpec};
use crate::signals::{convolution_matrix, TimeSeriesData};

/// Matrices of the base program for constraint horizon `m`.
#[derive(Debug, Clone)]
pub struct QPDataMatrices {
    /// `n_D x n_D`: kernel convolved in both arguments.
    pub o: DMatrix<f64>,
    /// `n_D x (m+1)`: convolved kernel sections.
    pub l: DMatrix<f64>,
    /// `(m+1) x (m+1)` kernel Gram.
    pub k: DMatrix<f64>,
    pub y: DVector<f64>,
    /// Convolved dominant mode.
    pub b: DVector<f64>,
    /// `rho^j`, `j = 0..=m`.
    pub c: DVector<f64>,
    pub m: usize,
}

impl QPDataMatrices {
    /// The joint Gram `[O L; L^T K]`.
    pub fn joint_gram(&self) -> DMatrix<f64> {
        let n = self.o.nrows();
        let k = self.k.nrows();
        let mut g = DMatrix::zeros(n + k, n + k);
        g.view_mut((0, 0), (n, n)).copy_from(&self.o);
        g.view_mut((0, n), (n, k)).copy_from(&self.l);
        g.view_mut((n, 0), (k, n)).copy_from(&self.l.transpose());
        g.view_mut((n, n), (k, k)).copy_from(&self.k);
        g
    }

    /// `[O L]`.
    pub fn output_block(&self) -> DMatrix<f64> {
        let n = self.o.nrows();
        let k = self.k.nrows();
        let mut g = DMatrix::zeros(n, n + k);
        g.view_mut((0, 0), (n, n)).copy_from(&self.o);
        g.view_mut((0, n), (n, k)).copy_from(&self.l);
        g
    }

    /// `[L^T K]`: values of `h_0..h_m` for a coefficient vector.
    pub fn constraint_block(&self) -> DMatrix<f64> {
        let n = self.o.nrows();
        let k = self.k.nrows();
        let mut g = DMatrix::zeros(k, n + k);
        g.view_mut((0, 0), (k, n)).copy_from(&self.l.transpose());
        g.view_mut((0, n), (k, k)).copy_from(&self.k);
        g
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(PosIdError::config(format!("rho must lie in (0, 1), got {rho}")));
    }
    Ok(())
}

pub fn assemble_core(kernel: &KernelSpec, data: &TimeSeriesData, rho: f64, m: usize) -> Result<QPDataMatrices> {
    check_rho(rho)?;
    let w = data.window();
    let u = convolution_matrix(data, w);
    let lags: Vec<usize> = (0..w).collect();
    let sections: Vec<usize> = (0..=m).collect();

    let k_ww = kernel.gram_square(w);
    let l = &u * kernel.gram(&lags, &sections);
    let mut o = &u * &k_ww * u.transpose();
    let n = o.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (o[(i, j)] + o[(j, i)]);
            o[(i, j)] = v;
            o[(j, i)] = v;
        }
    }
    let k = kernel.gram_square(m + 1);
    let f = DVector::from_fn(w, |s, _| powu(rho, s));
    let b = &u * f;
    let c = DVector::from_fn(m + 1, |j, _| powu(rho, j));
    Ok(QPDataMatrices { o, l, k, y: data.outputs_vector(), b, c, m })
}

/// `B(i,j) = L^{t_i}(t^j rho^t)` and `C(i,j) = i^j rho^i` for `j < n`, `i <= m`.
#[derive(Debug, Clone)]
pub struct NupMatrices {
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

/// `t^j rho^t` with `0^0 = 1`.
pub fn poly_mode(rho: f64, j: usize, t: usize) -> f64 {
    powu(t as f64, j) * powu(rho, t)
}

pub fn assemble_nup(data: &TimeSeriesData, rho: f64, n: usize, m: usize) -> Result<NupMatrices> {
    check_rho(rho)?;
    if n == 0 {
        return Err(PosIdError::config("pole multiplicity must be at least 1"));
    }
    let w = data.window();
    let u = convolution_matrix(data, w);
    let modes = DMatrix::from_fn(w, n, |t, j| poly_mode(rho, j, t));
    let b = &u * modes;
    let c = DMatrix::from_fn(m + 1, n, |i, j| poly_mode(rho, j, i));
    Ok(NupMatrices { b, c })
}

/// Periodic Vandermonde blocks for `n` evenly spread dominant poles.
#[derive(Debug, Clone)]
pub struct SnpMatrices {
    /// Real part of `V_m(i,j) = w^(i j)`, `w = exp(2 pi i / n)`; `m x n`.
    pub vr: DMatrix<f64>,
    /// Imaginary part of `V_m`.
    pub vi: DMatrix<f64>,
    /// `diag(1, rho, .., rho^(m-1))`.
    pub d: DMatrix<f64>,
    /// `diag(0, 1, .., 1)`, `n x n`.
    pub e: DMatrix<f64>,
}

/// Angle of `w^(i j)` reduced modulo the period, for accurate trigonometry.
pub fn root_angle(n: usize, i: usize, j: usize) -> f64 {
    let r = ((i as u128 * j as u128) % n as u128) as f64;
    2.0 * std::f64::consts::PI * r / n as f64
}

pub fn assemble_snp(rho: f64, n: usize, m: usize) -> Result<SnpMatrices> {
    check_rho(rho)?;
    if n == 0 {
        return Err(PosIdError::config("number of dominant poles must be at least 1"));
    }
    let vr = DMatrix::from_fn(m, n, |i, j| clean(root_angle(n, i, j).cos()));
    let vi = DMatrix::from_fn(m, n, |i, j| clean(root_angle(n, i, j).sin()));
    let d = DMatrix::from_fn(m, m, |i, j| if i == j { powu(rho, i) } else { 0.0 });
    let e = DMatrix::from_fn(n, n, |i, j| if i == j && i > 0 { 1.0 } else { 0.0 });
    Ok(SnpMatrices { vr, vi, d, e })
}

/// Convolved harmonic modes: `Br(i,k) = L^{t_i}(rho^t cos(2 pi k t / n))` and
/// `Bi(i,k) = L^{t_i}(rho^t sin(2 pi k t / n))`.
pub fn assemble_snp_outputs(data: &TimeSeriesData, rho: f64, n: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_rho(rho)?;
    let w = data.window();
    let u = convolution_matrix(data, w);
    let fr = DMatrix::from_fn(w, n, |t, k| powu(rho, t) * clean(root_angle(n, t, k).cos()));
    let fi = DMatrix::from_fn(w, n, |t, k| powu(rho, t) * clean(root_angle(n, t, k).sin()));
    Ok((&u * fr, &u * fi))
}

/// Snap values within rounding of 0 or +-1 (roots of unity at quarter turns).
fn clean(v: f64) -> f64 {
    for target in [0.0, 1.0, -1.0] {
        if (v - target).abs() < 1e-15 {
            return target;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impulse_input_gives_kernel_blocks() {
        let mut u = vec![0.0; 6];
        u[0] = 1.0;
        let d = TimeSeriesData::at_rest(u, vec![0.0; 6]).unwrap();
        let k = KernelSpec::tc(0.7).unwrap();
        let q = assemble_core(&k, &d, 0.9, 8).unwrap();
        let idx6: Vec<usize> = (0..6).collect();
        let idx9: Vec<usize> = (0..9).collect();
        assert!((&q.o - k.gram(&idx6, &idx6)).amax() < 1e-15);
        assert!((&q.l - k.gram(&idx6, &idx9)).amax() < 1e-15);
    }

    #[test]
    fn unit_step_first_b() {
        let d = TimeSeriesData::at_rest(vec![1.0; 3], vec![0.0; 3]).unwrap();
        let q = assemble_core(&KernelSpec::tc(0.2).unwrap(), &d, 0.5, 2).unwrap();
        assert_eq!(q.b[0], 1.0);
        assert_eq!(q.c.as_slice(), &[1.0, 0.5, 0.25]);
    }

    #[test]
    fn nup_c_matrix() {
        let d = TimeSeriesData::at_rest(vec![1.0; 3], vec![0.0; 3]).unwrap();
        let nm = assemble_nup(&d, 0.5, 2, 2).unwrap();
        let want = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, 0.5, 0.25, 0.5]);
        assert!((nm.c - want).amax() < 1e-15);
    }

    #[test]
    fn nup_degenerates_to_core() {
        let d = TimeSeriesData::at_rest(vec![1.0, -1.0, 0.5, 2.0], vec![0.0; 4]).unwrap();
        let q = assemble_core(&KernelSpec::tc(0.3).unwrap(), &d, 0.8, 5).unwrap();
        let nm = assemble_nup(&d, 0.8, 1, 5).unwrap();
        assert!((nm.b.column(0) - &q.b).amax() < 1e-15);
        assert!((nm.c.column(0) - &q.c).amax() < 1e-15);
    }

    #[test]
    fn vandermonde_examples() {
        let s = assemble_snp(0.5, 2, 2).unwrap();
        assert_eq!(s.vr, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]));
        assert_eq!(s.vi, DMatrix::zeros(2, 2));
        let s = assemble_snp(0.5, 4, 4).unwrap();
        assert_eq!(s.vr.row(1).iter().cloned().collect::<Vec<_>>(), vec![1.0, 0.0, -1.0, 0.0]);
        assert_eq!(s.vi.row(1).iter().cloned().collect::<Vec<_>>(), vec![0.0, 1.0, 0.0, -1.0]);
        assert_eq!(s.e, DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0, 1.0, 1.0])));
        assert_eq!(s.d[(2, 2)], 0.25);
    }

    #[test]
    fn vandermonde_is_periodic() {
        let n = 3;
        let s = assemble_snp(0.9, n, 3 * n).unwrap();
        for i in 0..2 * n {
            assert_eq!(s.vr.row(i), s.vr.row(i + n));
            assert_eq!(s.vi.row(i), s.vi.row(i + n));
        }
    }
}
