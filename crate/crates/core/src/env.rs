//! Synthetic black-box objectives.
//!
//! Two ground-truth surfaces drive every experiment: a Gaussian-mixture
//! reward landscape discretized into arms, and a quadratic drag surface
//! standing in for a CFD solver. Both add Gaussian observation noise drawn
//! from a caller-owned generator and can emulate evaluation cost by sleeping.

use std::time::Duration;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::rng::Rng;

/// Axis-aligned search box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SearchBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(input("search box bounds must be non-empty and of equal dimension"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(input("search box requires lower < upper in every coordinate"));
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    /// Uniform grid with `per_axis` points per coordinate (row-major, last
    /// coordinate fastest). Single-point axes sit at the box center.
    pub fn grid(&self, per_axis: usize) -> Vec<Candidate> {
        let d = self.dim();
        let total = per_axis.pow(d as u32);
        (0..total)
            .map(|mut flat| {
                let mut coords = vec![0.0; d];
                for k in (0..d).rev() {
                    let i = flat % per_axis;
                    flat /= per_axis;
                    coords[k] = if per_axis == 1 {
                        0.5 * (self.lower[k] + self.upper[k])
                    } else {
                        self.lower[k]
                            + (self.upper[k] - self.lower[k]) * i as f64 / (per_axis - 1) as f64
                    };
                }
                Candidate::new(coords)
            })
            .collect()
    }
}

/// A point in the search space; carries its arm index when it came from a
/// discretized arm grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub coords: Vec<f64>,
    pub arm_id: Option<usize>,
}

impl Candidate {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords, arm_id: None }
    }

    pub fn arm(arm_id: usize, coords: Vec<f64>) -> Self {
        Self { coords, arm_id: Some(arm_id) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Row-major d×d covariance.
    pub covariance: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub components: Vec<MixtureComponent>,
    pub noise_sd: f64,
}

impl MixtureSpec {
    /// Three-bump 1-D landscape on [0, 1] with one dominant peak at 0.2.
    pub fn reference() -> Self {
        let bump = |weight: f64, mean: f64, var: f64| MixtureComponent {
            weight,
            mean: vec![mean],
            covariance: vec![vec![var]],
        };
        Self {
            components: vec![bump(0.4, 0.2, 0.004), bump(0.35, 0.55, 0.003), bump(0.25, 0.85, 0.005)],
            noise_sd: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
struct PreparedComponent {
    weight: f64,
    mean: DVector<f64>,
    chol_lower: DMatrix<f64>,
}

/// A validated Gaussian mixture reward landscape.
#[derive(Debug, Clone)]
pub struct Mixture {
    spec: MixtureSpec,
    dim: usize,
    components: Vec<PreparedComponent>,
    noise: Option<Normal<f64>>,
}

impl Mixture {
    pub fn new(spec: MixtureSpec) -> Result<Self> {
        let first = spec
            .components
            .first()
            .ok_or_else(|| Error::Construction("mixture needs at least one component".into()))?;
        let dim = first.mean.len();
        if dim == 0 {
            return Err(Error::Construction("mixture dimension must be positive".into()));
        }
        let weight_sum: f64 = spec.components.iter().map(|c| c.weight).sum();
        if spec.components.iter().any(|c| !(c.weight > 0.0)) || (weight_sum - 1.0).abs() > 1e-12 {
            return Err(Error::Construction(format!(
                "mixture weights must be positive and sum to 1 (sum = {weight_sum})"
            )));
        }
        if !(spec.noise_sd >= 0.0) || !spec.noise_sd.is_finite() {
            return Err(Error::Construction("noise_sd must be finite and >= 0".into()));
        }
        let mut components = Vec::with_capacity(spec.components.len());
        for (i, c) in spec.components.iter().enumerate() {
            if c.mean.len() != dim || c.covariance.len() != dim || c.covariance.iter().any(|r| r.len() != dim) {
                return Err(Error::Construction(format!("component {i} has inconsistent dimensions")));
            }
            let cov = DMatrix::from_fn(dim, dim, |r, k| c.covariance[r][k]);
            if (&cov - cov.transpose()).abs().max() > 1e-12 {
                return Err(Error::Construction(format!("component {i} covariance is not symmetric")));
            }
            let chol = cov.cholesky().ok_or_else(|| {
                Error::Construction(format!("component {i} covariance is not positive definite"))
            })?;
            components.push(PreparedComponent {
                weight: c.weight,
                mean: DVector::from_column_slice(&c.mean),
                chol_lower: chol.l(),
            });
        }
        let noise = if spec.noise_sd > 0.0 {
            Some(Normal::new(0.0, spec.noise_sd).map_err(|e| Error::Construction(e.to_string()))?)
        } else {
            None
        };
        Ok(Self { spec, dim, components, noise })
    }

    pub fn reference() -> Self {
        Self::new(MixtureSpec::reference()).expect("reference mixture is valid")
    }

    pub fn spec(&self) -> &MixtureSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise_sd(&self) -> f64 {
        self.spec.noise_sd
    }
}

/// Noiseless mixture value `Σ wᵢ exp(−½ (x−μᵢ)ᵀ Σᵢ⁻¹ (x−μᵢ))`.
pub fn true_mixture_mean(x: &[f64], mixture: &Mixture) -> Result<f64> {
    if x.len() != mixture.dim {
        return Err(input(format!("expected a {}-dimensional point, got {}", mixture.dim, x.len())));
    }
    let x = DVector::from_column_slice(x);
    let value = mixture
        .components
        .iter()
        .map(|c| {
            let z = c
                .chol_lower
                .solve_lower_triangular(&(&x - &c.mean))
                .expect("Cholesky factor has a positive diagonal");
            c.weight * (-0.5 * z.norm_squared()).exp()
        })
        .sum();
    Ok(value)
}

/// One noisy observation of the mixture at `x`; advances `rng` by one
/// normal draw when the noise level is positive.
pub fn gaussian_mixture_reward(x: &[f64], mixture: &Mixture, rng: &mut Rng) -> Result<f64> {
    let mean = true_mixture_mean(x, mixture)?;
    Ok(match &mixture.noise {
        Some(noise) => mean + noise.sample(rng),
        None => mean,
    })
}

/// Quadratic drag bowl used in place of a CFD solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DragSurfaceSpec {
    pub camber_opt: f64,
    pub thickness_opt: f64,
    pub base_drag: f64,
    pub curvature_c: f64,
    pub curvature_t: f64,
    pub cross_term: f64,
    pub noise_sd: f64,
    /// Emulated solver time per evaluation, milliseconds.
    #[serde(default)]
    pub eval_delay_ms: f64,
}

impl Default for DragSurfaceSpec {
    fn default() -> Self {
        Self {
            camber_opt: 0.075,
            thickness_opt: 0.14,
            base_drag: 0.087,
            curvature_c: 2.0,
            curvature_t: 0.8,
            cross_term: 0.3,
            noise_sd: 0.002,
            eval_delay_ms: 0.0,
        }
    }
}

pub const CAMBER_RANGE: (f64, f64) = (0.01, 0.1);
pub const THICKNESS_RANGE: (f64, f64) = (0.05, 0.2);

impl DragSurfaceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.curvature_c > 0.0 && self.curvature_t > 0.0) {
            return Err(Error::Construction("drag curvatures must be positive".into()));
        }
        // Positive-definite Hessian [[2a, c], [c, 2b]] keeps the minimum unique.
        if self.cross_term * self.cross_term >= 4.0 * self.curvature_c * self.curvature_t {
            return Err(Error::Construction("cross_term too large: drag surface is not a bowl".into()));
        }
        if !(self.base_drag > 0.0) {
            return Err(Error::Construction("base_drag must be positive".into()));
        }
        if !(self.noise_sd >= 0.0) || !(self.eval_delay_ms >= 0.0) {
            return Err(Error::Construction("noise_sd and eval_delay_ms must be >= 0".into()));
        }
        Ok(())
    }

    /// The camber × thickness design box.
    pub fn search_box() -> SearchBox {
        SearchBox::new(
            vec![CAMBER_RANGE.0, THICKNESS_RANGE.0],
            vec![CAMBER_RANGE.1, THICKNESS_RANGE.1],
        )
        .expect("static box is valid")
    }

    /// Noiseless drag.
    pub fn surface(&self, camber: f64, thickness: f64) -> f64 {
        let dc = camber - self.camber_opt;
        let dt = thickness - self.thickness_opt;
        self.base_drag + self.curvature_c * dc * dc + self.curvature_t * dt * dt + self.cross_term * dc * dt
    }
}

/// Noisy drag at a design point, sleeping `eval_delay_ms` first.
pub fn mock_cfd_drag(camber: f64, thickness: f64, spec: &DragSurfaceSpec, rng: &mut Rng) -> Result<f64> {
    let design_box = DragSurfaceSpec::search_box();
    if !design_box.contains(&[camber, thickness]) {
        return Err(input(format!(
            "design (camber={camber}, thickness={thickness}) lies outside [0.01,0.1]x[0.05,0.2]"
        )));
    }
    emulate_cost(spec.eval_delay_ms);
    let noise = if spec.noise_sd > 0.0 {
        Normal::new(0.0, spec.noise_sd).map_err(|e| Error::Construction(e.to_string()))?.sample(rng)
    } else {
        0.0
    };
    Ok(spec.surface(camber, thickness) + noise)
}

fn emulate_cost(ms: f64) {
    if ms > 0.0 {
        std::thread::sleep(Duration::from_secs_f64(ms / 1000.0));
    }
}

/// A finite set of arms with known true means, as seen by the scheduler.
pub trait ArmEnvironment: Sync {
    fn arm_count(&self) -> usize;
    /// Location of `arm` in the search space (used by surrogate-guided
    /// candidate selection).
    fn arm_coords(&self, arm: usize) -> &[f64];
    fn true_mean(&self, arm: usize) -> f64;
    /// One noisy evaluation; may block to emulate evaluation cost.
    fn sample(&self, arm: usize, rng: &mut Rng) -> f64;
    /// Nominal evaluation cost in milliseconds.
    fn eval_cost_ms(&self) -> f64 {
        0.0
    }

    fn best_arm(&self) -> usize {
        (0..self.arm_count()).fold(0, |best, a| if self.true_mean(a) > self.true_mean(best) { a } else { best })
    }

    fn best_mean(&self) -> f64 {
        self.true_mean(self.best_arm())
    }
}

/// Mixture landscape discretized into arms.
#[derive(Debug, Clone)]
pub struct MixtureArms {
    mixture: Mixture,
    arms: Vec<Candidate>,
    means: Vec<f64>,
    eval_cost_ms: f64,
}

impl MixtureArms {
    pub fn new(mixture: Mixture, arms: Vec<Vec<f64>>, eval_cost_ms: f64) -> Result<Self> {
        if arms.is_empty() {
            return Err(input("at least one arm is required"));
        }
        let means = arms.iter().map(|a| true_mixture_mean(a, &mixture)).collect::<Result<Vec<_>>>()?;
        let arms = arms.into_iter().enumerate().map(|(i, c)| Candidate::arm(i, c)).collect();
        Ok(Self { mixture, arms, means, eval_cost_ms: eval_cost_ms.max(0.0) })
    }

    /// `count` evenly spaced arms over `[lower, upper]` of a 1-D mixture.
    pub fn uniform_grid(mixture: Mixture, count: usize, lower: f64, upper: f64, eval_cost_ms: f64) -> Result<Self> {
        if mixture.dim() != 1 {
            return Err(input("uniform_grid requires a 1-D mixture"));
        }
        let bounds = SearchBox::new(vec![lower], vec![upper])?;
        let arms = bounds.grid(count).into_iter().map(|c| c.coords).collect();
        Self::new(mixture, arms, eval_cost_ms)
    }

    /// The reference 15-arm grid on [0, 1].
    pub fn reference(eval_cost_ms: f64) -> Self {
        Self::uniform_grid(Mixture::reference(), 15, 0.0, 1.0, eval_cost_ms).expect("reference grid is valid")
    }

    pub fn mixture(&self) -> &Mixture {
        &self.mixture
    }

    pub fn arms(&self) -> &[Candidate] {
        &self.arms
    }
}

impl ArmEnvironment for MixtureArms {
    fn arm_count(&self) -> usize {
        self.arms.len()
    }

    fn arm_coords(&self, arm: usize) -> &[f64] {
        &self.arms[arm].coords
    }

    fn true_mean(&self, arm: usize) -> f64 {
        self.means[arm]
    }

    fn sample(&self, arm: usize, rng: &mut Rng) -> f64 {
        emulate_cost(self.eval_cost_ms);
        match &self.mixture.noise {
            Some(noise) => self.means[arm] + noise.sample(rng),
            None => self.means[arm],
        }
    }

    fn eval_cost_ms(&self) -> f64 {
        self.eval_cost_ms
    }
}

/// Arms paying 1 with probability `p` and 0 otherwise.
#[derive(Debug, Clone)]
pub struct BernoulliArms {
    probs: Vec<f64>,
    coords: Vec<Vec<f64>>,
}

impl BernoulliArms {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(input("Bernoulli arms need probabilities in [0, 1]"));
        }
        let coords = (0..probs.len()).map(|i| vec![i as f64]).collect();
        Ok(Self { probs, coords })
    }
}

impl ArmEnvironment for BernoulliArms {
    fn arm_count(&self) -> usize {
        self.probs.len()
    }

    fn arm_coords(&self, arm: usize) -> &[f64] {
        &self.coords[arm]
    }

    fn true_mean(&self, arm: usize) -> f64 {
        self.probs[arm]
    }

    fn sample(&self, arm: usize, rng: &mut Rng) -> f64 {
        if rng.random::<f64>() < self.probs[arm] {
            1.0
        } else {
            0.0
        }
    }
}
