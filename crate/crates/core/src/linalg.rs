//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Extreme eigenvalues `(min, max)` of a symmetric matrix.
pub fn sym_eig_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    if m.nrows() == 0 {
        return (0.0, 0.0);
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// True when `min_eig >= -rel_tol * max(|max_eig|, tiny)`.
pub fn is_psd(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    let (lo, hi) = sym_eig_extremes(m);
    lo >= -rel_tol * hi.abs().max(f64::MIN_POSITIVE)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn max_abs_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Minimum-norm least-squares solution of `a x = b` via SVD with a relative
/// singular-value cutoff.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DVector<f64>, rel_cut: f64) -> DVector<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DVector::zeros(a.ncols());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = rel_cut * smax;
    svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

/// Infinity norm of a vector (0 for empty vectors).
pub fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

/// Symmetric square root factor of a PSD matrix restricted to its numerically
/// nonzero spectrum: returns `(V_r, lambda_r)` with eigenvalues above
/// `rel_cut * max_eig`, ordered by decreasing eigenvalue.
pub fn psd_range_eigen(m: &DMatrix<f64>, rel_cut: f64) -> (DMatrix<f64>, DVector<f64>) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&j| eig.eigenvalues[j] > rel_cut * max && eig.eigenvalues[j] > 0.0)
        .collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let n = m.nrows();
    let mut v = DMatrix::zeros(n, idx.len());
    let mut lam = DVector::zeros(idx.len());
    for (c, &j) in idx.iter().enumerate() {
        v.set_column(c, &eig.eigenvectors.column(j));
        lam[c] = eig.eigenvalues[j];
    }
    (v, lam)
}
