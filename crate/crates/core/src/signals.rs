//! Input-output records, truncated impulse responses and convolution.

use nalgebra::{DMatrix, DVector};

use crate::error::{PosIdError, Result};
use crate::kernels::powu;

/// Sampled input/output record.
///
/// Inputs are stored densely from `input_start` onwards and are zero before
/// it. Outputs are aligned with `sample_times`, which must be strictly
/// increasing and lie inside the input record.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesData {
    sample_times: Vec<i64>,
    input_start: i64,
    inputs: Vec<f64>,
    outputs: Vec<f64>,
}

impl TimeSeriesData {
    pub fn new(sample_times: Vec<i64>, input_start: i64, inputs: Vec<f64>, outputs: Vec<f64>) -> Result<Self> {
        if sample_times.is_empty() {
            return Err(PosIdError::data("at least one sample is required"));
        }
        if sample_times.len() != outputs.len() {
            return Err(PosIdError::data(format!("{} sample times but {} outputs", sample_times.len(), outputs.len())));
        }
        if input_start > 0 {
            return Err(PosIdError::data(format!("input support must start at or before t = 0, got {input_start}")));
        }
        if sample_times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PosIdError::data("sample times must be strictly increasing"));
        }
        if sample_times[0] < input_start {
            return Err(PosIdError::data("sample times precede the input support"));
        }
        let last = *sample_times.last().unwrap();
        let needed = (last - input_start + 1) as usize;
        if inputs.len() < needed {
            return Err(PosIdError::data(format!(
                "inputs cover {} steps from t = {input_start} but samples reach t = {last}",
                inputs.len()
            )));
        }
        if inputs.iter().chain(outputs.iter()).any(|v| !v.is_finite()) {
            return Err(PosIdError::data("non-finite input or output value"));
        }
        Ok(Self { sample_times, input_start, inputs, outputs })
    }

    /// System at rest: `u_t = 0` for `t < 0`, outputs sampled at `t = 0..n-1`.
    ///
    /// `u` may be longer than `y` (future inputs for prediction).
    pub fn at_rest(u: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let times = (0..y.len() as i64).collect();
        Self::new(times, 0, u, y)
    }

    pub fn sample_times(&self) -> &[i64] {
        &self.sample_times
    }

    pub fn input_start(&self) -> i64 {
        self.input_start
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn n_d(&self) -> usize {
        self.sample_times.len()
    }

    pub fn last_time(&self) -> i64 {
        *self.sample_times.last().unwrap()
    }

    /// Last time for which the input is known.
    pub fn input_end(&self) -> i64 {
        self.input_start + self.inputs.len() as i64 - 1
    }

    /// Number of input lags that can influence any sample: `t_last - t_start + 1`.
    pub fn window(&self) -> usize {
        (self.last_time() - self.input_start + 1) as usize
    }

    /// `u_t`, zero before the input support; `None` past the known record.
    pub fn input_at(&self, t: i64) -> Option<f64> {
        if t < self.input_start {
            Some(0.0)
        } else {
            self.inputs.get((t - self.input_start) as usize).copied()
        }
    }

    /// At rest with contiguous sampling from zero.
    pub fn is_at_rest(&self) -> bool {
        self.input_start == 0 && self.sample_times.iter().enumerate().all(|(i, &t)| t == i as i64)
    }

    pub fn outputs_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.outputs)
    }

    /// Keep only the listed samples; the full input history is retained.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let mut idx = indices.to_vec();
        idx.sort_unstable();
        idx.dedup();
        if idx.iter().any(|&i| i >= self.n_d()) {
            return Err(PosIdError::data("sample index out of range"));
        }
        let times = idx.iter().map(|&i| self.sample_times[i]).collect();
        let outputs = idx.iter().map(|&i| self.outputs[i]).collect();
        Self::new(times, self.input_start, self.inputs.clone(), outputs)
    }

    /// Same inputs and sample times with different outputs.
    pub fn with_outputs(&self, outputs: Vec<f64>) -> Result<Self> {
        Self::new(self.sample_times.clone(), self.input_start, self.inputs.clone(), outputs)
    }
}

/// Impulse response truncated at horizon `H = values.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    values: Vec<f64>,
}

impl ImpulseResponse {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(PosIdError::data("impulse response needs at least one coefficient"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PosIdError::data("impulse response has non-finite entries"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    /// Coefficient at lag `s`, zero past the horizon.
    pub fn at(&self, s: usize) -> f64 {
        self.values.get(s).copied().unwrap_or(0.0)
    }

    /// Truncate or zero-pad to `h` coefficients.
    pub fn resized(&self, h: usize) -> Vec<f64> {
        (0..h).map(|s| self.at(s)).collect()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// `sum_{s=0}^{min(H-1, t - t_start)} g_s u_{t-s}`, summed with `s` ascending.
pub fn convolve(g: &ImpulseResponse, data: &TimeSeriesData, t: i64) -> Result<f64> {
    if t < data.input_start() {
        return Err(PosIdError::domain(format!("time {t} precedes the input support start {}", data.input_start())));
    }
    if t > data.input_end() {
        return Err(PosIdError::domain(format!("input unknown at time {t} (record ends at {})", data.input_end())));
    }
    let base = (t - data.input_start()) as usize;
    let last = base.min(g.horizon() - 1);
    let u = data.inputs();
    let mut acc = 0.0;
    for s in 0..=last {
        acc += g.values[s] * u[base - s];
    }
    Ok(acc)
}

/// Lower-triangular Toeplitz matrix `[u_{i-j}]` of at-rest data.
pub fn toeplitz(data: &TimeSeriesData, n: usize) -> Result<DMatrix<f64>> {
    if data.input_start() != 0 {
        return Err(PosIdError::data("Toeplitz form requires data at rest (input support from 0)"));
    }
    if data.inputs().len() < n {
        return Err(PosIdError::data(format!("Toeplitz size {n} exceeds the {} known inputs", data.inputs().len())));
    }
    let u = data.inputs();
    Ok(DMatrix::from_fn(n, n, |i, j| if i >= j { u[i - j] } else { 0.0 }))
}

/// Convolution operator restricted to the sample times and `width` lags:
/// entry `(i, s)` is `u_{t_i - s}` (zero before the input support).
pub fn convolution_matrix(data: &TimeSeriesData, width: usize) -> DMatrix<f64> {
    let u = data.inputs();
    let t0 = data.input_start();
    DMatrix::from_fn(data.n_d(), width, |i, s| {
        let k = data.sample_times()[i] - t0 - s as i64;
        if k >= 0 {
            u[k as usize]
        } else {
            0.0
        }
    })
}

/// Same as [`convolution_matrix`] for arbitrary evaluation times.
pub fn convolution_matrix_at(data: &TimeSeriesData, times: &[i64], width: usize) -> Result<DMatrix<f64>> {
    if let Some(&t) = times.iter().find(|&&t| t < data.input_start() || t > data.input_end()) {
        return Err(PosIdError::domain(format!("input unknown at time {t}")));
    }
    let u = data.inputs();
    let t0 = data.input_start();
    Ok(DMatrix::from_fn(times.len(), width, |i, s| {
        let k = times[i] - t0 - s as i64;
        if k >= 0 {
            u[k as usize]
        } else {
            0.0
        }
    }))
}

/// `(rho^t)_{t < horizon}`.
pub fn dominant_mode(rho: f64, horizon: usize) -> ImpulseResponse {
    ImpulseResponse { values: (0..horizon.max(1)).map(|t| powu(rho, t)).collect() }
}

/// Numerical rank of the `n x n` Hankel window `[g_{i+j}]`.
pub fn hankel_numerical_rank(g: &ImpulseResponse, n: usize, tol: f64) -> Result<usize> {
    if n == 0 {
        return Ok(0);
    }
    if 2 * n - 1 > g.horizon() {
        return Err(PosIdError::domain(format!(
            "Hankel window {n} needs {} coefficients, horizon is {}",
            2 * n - 1,
            g.horizon()
        )));
    }
    let h = DMatrix::from_fn(n, n, |i, j| g.values[i + j]);
    let sv = h.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > tol * smax).count())
}
