//! Gaussian-process regression with a squared-exponential (RBF) kernel.
//!
//! Zero prior mean. [`GpModel::fit`] works in raw units; [`GpModel::fit_normalized`]
//! maps inputs onto the unit box and standardizes outputs first, which is
//! what the experiment loops use so that one set of default hyperparameters
//! serves every objective.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::env::SearchBox;
use crate::error::{input, Error, Result};

/// Diagonal jitter tried, in order, when the kernel matrix is not numerically PD.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-10, 1e-8, 1e-6];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpParams {
    pub lengthscale: f64,
    pub signal_var: f64,
    pub noise_var: f64,
}

impl Default for GpParams {
    fn default() -> Self {
        Self { lengthscale: 0.2, signal_var: 1.0, noise_var: 1e-4 }
    }
}

impl GpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lengthscale > 0.0) || !(self.signal_var > 0.0) || !(self.noise_var >= 0.0) {
            return Err(input("GP requires lengthscale > 0, signal_var > 0, noise_var >= 0"));
        }
        Ok(())
    }
}

/// `s² exp(−‖x − x'‖² / (2ℓ²))`.
pub fn rbf_kernel(x: &[f64], x2: &[f64], lengthscale: f64, signal_var: f64) -> Result<f64> {
    if x.len() != x2.len() {
        return Err(input(format!("kernel inputs differ in dimension ({} vs {})", x.len(), x2.len())));
    }
    if !(lengthscale > 0.0) {
        return Err(input("lengthscale must be positive"));
    }
    Ok(rbf_unchecked(x, x2, lengthscale, signal_var))
}

fn rbf_unchecked(x: &[f64], x2: &[f64], lengthscale: f64, signal_var: f64) -> f64 {
    let d2: f64 = x.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
    signal_var * (-d2 / (2.0 * lengthscale * lengthscale)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

impl Prediction {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Transform {
    offset: Vec<f64>,
    scale: Vec<f64>,
    y_mean: f64,
    y_sd: f64,
}

impl Transform {
    fn identity(dim: usize) -> Self {
        Self { offset: vec![0.0; dim], scale: vec![1.0; dim], y_mean: 0.0, y_sd: 1.0 }
    }

    fn input(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.offset.iter().zip(&self.scale)).map(|(v, (o, s))| (v - o) / s).collect()
    }
}

/// A fitted GP posterior. Immutable; refitting produces a new value.
#[derive(Debug, Clone)]
pub struct GpModel {
    params: GpParams,
    train_x: Vec<Vec<f64>>,
    train_y: Vec<f64>,
    transform: Transform,
    inputs: Vec<Vec<f64>>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

impl GpModel {
    /// Fits in raw units with prior mean 0.
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: GpParams) -> Result<Self> {
        let dim = check_training_set(x, y)?;
        Self::fit_with(x, y, params, Transform::identity(dim))
    }

    /// Fits after mapping `x` onto the unit box of `bounds` and standardizing
    /// `y`; predictions are returned in the original units.
    pub fn fit_normalized(x: &[Vec<f64>], y: &[f64], params: GpParams, bounds: &SearchBox) -> Result<Self> {
        let dim = check_training_set(x, y)?;
        if dim != bounds.dim() {
            return Err(input("training inputs and search box differ in dimension"));
        }
        let n = y.len() as f64;
        let y_mean = y.iter().sum::<f64>() / n;
        let y_sd = (y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n).sqrt();
        let transform = Transform {
            offset: bounds.lower.clone(),
            scale: bounds.lower.iter().zip(&bounds.upper).map(|(l, u)| u - l).collect(),
            y_mean,
            y_sd: if y_sd > 0.0 { y_sd } else { 1.0 },
        };
        Self::fit_with(x, y, params, transform)
    }

    fn fit_with(x: &[Vec<f64>], y: &[f64], params: GpParams, transform: Transform) -> Result<Self> {
        params.validate()?;
        let inputs: Vec<Vec<f64>> = x.iter().map(|row| transform.input(row)).collect();
        if params.noise_var == 0.0 {
            for i in 0..inputs.len() {
                if let Some(j) = (0..i).find(|&j| inputs[j] == inputs[i]) {
                    return Err(Error::Numerical(format!(
                        "training rows {j} and {i} coincide and noise_var = 0: kernel matrix is singular"
                    )));
                }
            }
        }
        let n = inputs.len();
        let gram = DMatrix::from_fn(n, n, |i, j| {
            rbf_unchecked(&inputs[i], &inputs[j], params.lengthscale, params.signal_var)
        });
        let targets =
            DVector::from_iterator(n, y.iter().map(|v| (v - transform.y_mean) / transform.y_sd));

        let mut last_min_diag = f64::NAN;
        for &jitter in &JITTER_LADDER {
            let mut k = gram.clone();
            for i in 0..n {
                k[(i, i)] += params.noise_var + jitter;
            }
            last_min_diag = k.diagonal().min();
            if let Some(chol) = k.cholesky() {
                let alpha = chol.solve(&targets);
                return Ok(Self {
                    params,
                    train_x: x.to_vec(),
                    train_y: y.to_vec(),
                    transform,
                    inputs,
                    chol,
                    alpha,
                    jitter,
                });
            }
        }
        Err(Error::Numerical(format!(
            "Cholesky of the {n}x{n} kernel matrix failed with jitter up to {:e} (min diagonal {last_min_diag:e})",
            JITTER_LADDER[JITTER_LADDER.len() - 1]
        )))
    }

    pub fn params(&self) -> GpParams {
        self.params
    }

    pub fn dim(&self) -> usize {
        self.transform.offset.len()
    }

    pub fn train_x(&self) -> &[Vec<f64>] {
        &self.train_x
    }

    pub fn train_y(&self) -> &[f64] {
        &self.train_y
    }

    /// Jitter that was added to the diagonal to obtain the factorization.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Lower Cholesky factor of `K + (σ_n² + jitter) I` in model units.
    pub fn chol_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// Kernel matrix `K + σ_n² I` in model units (without jitter).
    pub fn kernel_matrix(&self) -> DMatrix<f64> {
        let n = self.inputs.len();
        DMatrix::from_fn(n, n, |i, j| {
            let k = rbf_unchecked(&self.inputs[i], &self.inputs[j], self.params.lengthscale, self.params.signal_var);
            if i == j {
                k + self.params.noise_var
            } else {
                k
            }
        })
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// Observation-noise variance expressed in output units.
    pub fn output_noise_var(&self) -> f64 {
        self.params.noise_var * self.transform.y_sd * self.transform.y_sd
    }

    /// Posterior mean and variance (clamped at 0) at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.dim() {
            return Err(input(format!("query has dimension {}, model has {}", x.len(), self.dim())));
        }
        let z = self.transform.input(x);
        let k_star = DVector::from_iterator(
            self.inputs.len(),
            self.inputs.iter().map(|row| rbf_unchecked(row, &z, self.params.lengthscale, self.params.signal_var)),
        );
        let mean = k_star.dot(&self.alpha);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&k_star)
            .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
        let variance = (self.params.signal_var - v.norm_squared()).max(0.0);
        let sd = self.transform.y_sd;
        Ok(Prediction { mean: self.transform.y_mean + sd * mean, variance: sd * sd * variance })
    }

    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }
}

fn check_training_set(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.is_empty() {
        return Err(input("GP needs at least one training point"));
    }
    if x.len() != y.len() {
        return Err(input(format!("{} inputs but {} targets", x.len(), y.len())));
    }
    let dim = x[0].len();
    if dim == 0 || x.iter().any(|r| r.len() != dim) {
        return Err(input("training inputs must share a positive dimension"));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(input("training data must be finite"));
    }
    Ok(dim)
}
