//! Percentile bootstrap intervals and the Wilcoxon signed-rank test.

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{input, Result};
use crate::rng::substream;

/// Smallest sample size accepted by the normal-approximation Wilcoxon test.
pub const WILCOXON_MIN_PAIRS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapSpec {
    pub resamples: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for BootstrapSpec {
    fn default() -> Self {
        Self { resamples: 2000, alpha: 0.05, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Mean,
    Median,
}

impl Statistic {
    pub fn apply(self, xs: &mut [f64]) -> f64 {
        match self {
            Statistic::Mean => xs.iter().sum::<f64>() / xs.len() as f64,
            Statistic::Median => {
                xs.sort_by(f64::total_cmp);
                let n = xs.len();
                if n % 2 == 1 {
                    xs[n / 2]
                } else {
                    0.5 * (xs[n / 2 - 1] + xs[n / 2])
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    /// Mean of the bootstrap replicates.
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Percentile bootstrap: `B` resamples with replacement, endpoints taken by
/// nearest rank at `α/2` and `1 − α/2`.
pub fn bootstrap_ci(samples: &[f64], spec: &BootstrapSpec, statistic: Statistic) -> Result<ConfidenceInterval> {
    if samples.is_empty() {
        return Err(input("bootstrap needs at least one sample"));
    }
    if spec.resamples < 100 {
        return Err(input("bootstrap needs at least 100 resamples"));
    }
    if !(spec.alpha > 0.0 && spec.alpha < 1.0) {
        return Err(input("alpha must lie in (0, 1)"));
    }
    let n = samples.len();
    let mut rng = substream(spec.seed, 0);
    let mut buf = vec![0.0; n];
    let mut replicates: Vec<f64> = (0..spec.resamples)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = samples[rng.random_range(0..n)];
            }
            statistic.apply(&mut buf)
        })
        .collect();
    let estimate = replicates.iter().sum::<f64>() / replicates.len() as f64;
    replicates.sort_by(f64::total_cmp);
    Ok(ConfidenceInterval {
        estimate,
        lower: nearest_rank(&replicates, spec.alpha / 2.0),
        upper: nearest_rank(&replicates, 1.0 - spec.alpha / 2.0),
    })
}

/// Nearest-rank percentile of sorted data: element `⌈q·n⌉` (1-based).
fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// `min(W⁺, W⁻)`.
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Pairs left after dropping zero differences.
    pub n: usize,
    pub z: f64,
    pub p_value: f64,
}

/// Two-sided Wilcoxon signed-rank test on paired samples, normal
/// approximation with tie and continuity corrections.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    if x.len() != y.len() {
        return Err(input(format!("paired samples differ in length ({} vs {})", x.len(), y.len())));
    }
    if x.len() < WILCOXON_MIN_PAIRS {
        return Err(input(format!("Wilcoxon test needs at least {WILCOXON_MIN_PAIRS} pairs")));
    }
    let mut diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - a).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(input("all paired differences are zero: Wilcoxon test undefined"));
    }
    diffs.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let n = diffs.len();

    let mut w_plus = 0.0;
    let mut w_minus = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[j + 1].abs() == diffs[i].abs() {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their midrank
        let midrank = (i + j + 2) as f64 / 2.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        for d in &diffs[i..=j] {
            if *d > 0.0 {
                w_plus += midrank;
            } else {
                w_minus += midrank;
            }
        }
        i = j + 1;
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let statistic = w_plus.min(w_minus);
    let (z, p_value) = if var > 0.0 {
        let z = ((statistic - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        (z, (2.0 * (1.0 - normal.cdf(z))).clamp(0.0, 1.0))
    } else {
        (0.0, 1.0)
    };
    Ok(WilcoxonResult { statistic, w_plus, w_minus, n, z, p_value })
}
