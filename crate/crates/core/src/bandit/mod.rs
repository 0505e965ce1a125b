//! Arm statistics and selection policies.
//!
//! The controller owns one [`ArmStats`] and is the only writer; policies are
//! pure functions of the statistics (and, for Thompson sampling, a
//! generator). All argmax operations break ties toward the lowest arm index.

mod regret;

pub use regret::{
    delayed_regret_order, ts_regret_order, ucb_regret_bound, LedgerEntry, RegretLedger,
};

use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::rng::Rng;

/// Floor on the plug-in reward variance of the Gaussian Thompson posterior.
pub const THOMPSON_VARIANCE_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardModel {
    Bernoulli,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Ucb,
    Thompson,
}

/// Running per-arm aggregates: empirical mean, pull count, sum of squared
/// deviations, and Beta(α, β) success/failure counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmStats {
    means: Vec<f64>,
    pulls: Vec<u64>,
    sq_dev: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl ArmStats {
    pub fn new(arms: usize) -> Result<Self> {
        if arms == 0 {
            return Err(input("at least one arm is required"));
        }
        Ok(Self {
            means: vec![0.0; arms],
            pulls: vec![0; arms],
            sq_dev: vec![0.0; arms],
            alpha: vec![1.0; arms],
            beta: vec![1.0; arms],
        })
    }

    /// Builds statistics from explicit `(mean, pulls)` pairs.
    pub fn from_summaries(summaries: &[(f64, u64)]) -> Result<Self> {
        let mut stats = Self::new(summaries.len())?;
        for (i, &(mean, n)) in summaries.iter().enumerate() {
            stats.means[i] = if n == 0 { 0.0 } else { mean };
            stats.pulls[i] = n;
        }
        Ok(stats)
    }

    pub fn arm_count(&self) -> usize {
        self.means.len()
    }

    pub fn mean(&self, arm: usize) -> f64 {
        self.means[arm]
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn pulls(&self, arm: usize) -> u64 {
        self.pulls[arm]
    }

    pub fn pull_counts(&self) -> &[u64] {
        &self.pulls
    }

    pub fn total_pulls(&self) -> u64 {
        self.pulls.iter().sum()
    }

    pub fn beta_counts(&self, arm: usize) -> (f64, f64) {
        (self.alpha[arm], self.beta[arm])
    }

    /// Unbiased sample variance of the rewards seen on `arm` (0 below two pulls).
    pub fn sample_variance(&self, arm: usize) -> f64 {
        match self.pulls[arm] {
            0 | 1 => 0.0,
            n => self.sq_dev[arm] / (n - 1) as f64,
        }
    }

    /// Incremental mean update `μ̂ ← μ̂ + (r − μ̂)/(n + 1)`.
    pub fn update_mean(&mut self, arm: usize, reward: f64) -> Result<()> {
        self.check_arm(arm)?;
        let n = self.pulls[arm] + 1;
        let delta = reward - self.means[arm];
        self.means[arm] += delta / n as f64;
        self.sq_dev[arm] += delta * (reward - self.means[arm]);
        self.pulls[arm] = n;
        Ok(())
    }

    /// Adds one Bernoulli outcome to the Beta counts of `arm`.
    pub fn record_bernoulli(&mut self, arm: usize, success: bool) -> Result<()> {
        self.check_arm(arm)?;
        if success {
            self.alpha[arm] += 1.0;
        } else {
            self.beta[arm] += 1.0;
        }
        Ok(())
    }

    /// Overwrites the Beta counts of `arm` (both floored at 1).
    pub fn set_beta_counts(&mut self, arm: usize, alpha: f64, beta: f64) -> Result<()> {
        self.check_arm(arm)?;
        self.alpha[arm] = alpha.max(1.0);
        self.beta[arm] = beta.max(1.0);
        Ok(())
    }

    fn check_arm(&self, arm: usize) -> Result<()> {
        if arm >= self.arm_count() {
            return Err(input(format!("arm {arm} out of range (arms = {})", self.arm_count())));
        }
        Ok(())
    }
}

/// UCB index `μ̂ᵢ + c·sqrt(ln t / nᵢ)`; infinite for unpulled arms.
pub fn ucb_index(stats: &ArmStats, arm: usize, t: u64, c: f64) -> f64 {
    let n = stats.pulls(arm);
    if n == 0 {
        return f64::INFINITY;
    }
    stats.mean(arm) + c * ((t.max(1) as f64).ln() / n as f64).sqrt()
}

/// UCB selection over all arms.
pub fn ucb_select(stats: &ArmStats, t: u64, c: f64) -> Result<usize> {
    let all: Vec<usize> = (0..stats.arm_count()).collect();
    ucb_select_among(stats, &all, t, c)
}

/// UCB selection restricted to `arms`: the lowest-index unpulled arm if
/// any, otherwise the index argmax.
pub fn ucb_select_among(stats: &ArmStats, arms: &[usize], t: u64, c: f64) -> Result<usize> {
    check_subset(stats, arms)?;
    if t == 0 {
        return Err(input("UCB round index starts at 1"));
    }
    if let Some(&unpulled) = arms.iter().filter(|&&a| stats.pulls(a) == 0).min() {
        return Ok(unpulled);
    }
    Ok(argmax_by(arms, |a| ucb_index(stats, a, t, c)))
}

/// Thompson sampling over all arms.
pub fn thompson_select(stats: &ArmStats, rng: &mut Rng, model: RewardModel) -> usize {
    let all: Vec<usize> = (0..stats.arm_count()).collect();
    thompson_select_among(stats, &all, rng, model).expect("full arm set is valid")
}

/// Thompson sampling restricted to `arms`. Draws one posterior sample per
/// listed arm, in list order.
pub fn thompson_select_among(stats: &ArmStats, arms: &[usize], rng: &mut Rng, model: RewardModel) -> Result<usize> {
    check_subset(stats, arms)?;
    let draws: Vec<f64> = arms.iter().map(|&a| posterior_draw(stats, a, rng, model)).collect();
    let best = (0..arms.len()).fold(0, |b, i| if draws[i] > draws[b] { i } else { b });
    // ties in draws fall to the earliest listed arm; callers list arms ascending
    Ok(arms[best])
}

fn posterior_draw(stats: &ArmStats, arm: usize, rng: &mut Rng, model: RewardModel) -> f64 {
    match model {
        RewardModel::Bernoulli => {
            let (a, b) = stats.beta_counts(arm);
            Beta::new(a, b).expect("Beta counts are >= 1").sample(rng)
        }
        RewardModel::Gaussian => {
            let n = stats.pulls(arm);
            let (mean, var) = if n == 0 {
                (0.0, 1.0)
            } else {
                let s2 = stats.sample_variance(arm).max(THOMPSON_VARIANCE_FLOOR);
                (stats.mean(arm), s2 / (n + 1) as f64)
            };
            Normal::new(mean, var.sqrt()).expect("finite posterior").sample(rng)
        }
    }
}

fn check_subset(stats: &ArmStats, arms: &[usize]) -> Result<()> {
    if arms.is_empty() {
        return Err(input("cannot select from an empty arm set"));
    }
    if let Some(&bad) = arms.iter().find(|&&a| a >= stats.arm_count()) {
        return Err(input(format!("arm {bad} out of range")));
    }
    Ok(())
}

fn argmax_by(arms: &[usize], score: impl Fn(usize) -> f64) -> usize {
    let mut best = arms[0];
    let mut best_score = score(best);
    for &a in &arms[1..] {
        let s = score(a);
        if s > best_score || (s == best_score && a < best) {
            best = a;
            best_score = s;
        }
    }
    best
}
