//! Acquisition scores and candidate selection from an unlabeled pool.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::env::Candidate;
use crate::error::{input, Result};
use crate::surrogate::GpModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcquisitionKind {
    ExpectedImprovement,
    Variance,
    MutualInformation,
    KCenter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionSpec {
    pub kind: AcquisitionKind,
    pub batch_size: usize,
    pub direction: Direction,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// Closed-form expected improvement over `best`.
pub fn expected_improvement(mean: f64, variance: f64, best: f64, direction: Direction) -> f64 {
    let gain = match direction {
        Direction::Minimize => best - mean,
        Direction::Maximize => mean - best,
    };
    let sd = variance.max(0.0).sqrt();
    if sd == 0.0 {
        return gain.max(0.0);
    }
    let z = gain / sd;
    let n = std_normal();
    (gain * n.cdf(z) + sd * n.pdf(z)).max(0.0)
}

/// GP-regression BALD score `½ ln(1 + σ²(x)/σ_n²)` in nats.
pub fn mutual_information_score(variance: f64, noise_var: f64) -> Result<f64> {
    if !(noise_var > 0.0) {
        return Err(input("mutual information needs a positive noise variance"));
    }
    Ok(0.5 * (variance.max(0.0) / noise_var).ln_1p())
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Greedy k-center: repeatedly take the pool point farthest from everything
/// labeled or already chosen. Returns pool indices in pick order.
pub fn greedy_k_center_indices(pool: &[Candidate], labeled: &[Candidate], k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    if pool.is_empty() {
        return Err(input("k-center selection from an empty pool"));
    }
    if k > pool.len() {
        return Err(input(format!("k = {k} exceeds pool size {}", pool.len())));
    }
    let mut nearest: Vec<f64> = pool
        .iter()
        .map(|p| labeled.iter().map(|l| distance(&p.coords, &l.coords)).fold(f64::INFINITY, f64::min))
        .collect();
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; pool.len()];
    for _ in 0..k {
        let mut best: Option<usize> = None;
        for i in 0..pool.len() {
            if taken[i] {
                continue;
            }
            if best.is_none_or(|b| nearest[i] > nearest[b]) {
                best = Some(i);
            }
        }
        let pick = best.expect("k <= pool size leaves an untaken point");
        taken[pick] = true;
        chosen.push(pick);
        for i in 0..pool.len() {
            nearest[i] = nearest[i].min(distance(&pool[i].coords, &pool[pick].coords));
        }
    }
    Ok(chosen)
}

pub fn greedy_k_center(pool: &[Candidate], labeled: &[Candidate], k: usize) -> Result<Vec<Candidate>> {
    Ok(greedy_k_center_indices(pool, labeled, k)?.into_iter().map(|i| pool[i].clone()).collect())
}

/// A pool member chosen by [`select_candidates`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    pub pool_index: usize,
    pub candidate: Candidate,
    pub score: f64,
}

/// Score of every pool point under `spec`, in pool order. For k-center the
/// score is the distance to the nearest training input.
pub fn score_pool(pool: &[Candidate], model: &GpModel, spec: &AcquisitionSpec) -> Result<Vec<f64>> {
    match spec.kind {
        AcquisitionKind::KCenter => Ok(pool
            .iter()
            .map(|p| model.train_x().iter().map(|x| distance(&p.coords, x)).fold(f64::INFINITY, f64::min))
            .collect()),
        kind => {
            let best = best_observed(model.train_y(), spec.direction);
            let noise_var = model.output_noise_var();
            pool.iter()
                .map(|p| {
                    let pred = model.predict(&p.coords)?;
                    Ok(match kind {
                        AcquisitionKind::ExpectedImprovement => {
                            expected_improvement(pred.mean, pred.variance, best, spec.direction)
                        }
                        AcquisitionKind::Variance => pred.variance,
                        AcquisitionKind::MutualInformation => {
                            // noiseless models carry no finite information score; rank by variance
                            if noise_var > 0.0 {
                                mutual_information_score(pred.variance, noise_var)?
                            } else {
                                pred.variance
                            }
                        }
                        AcquisitionKind::KCenter => unreachable!(),
                    })
                })
                .collect()
        }
    }
}

pub fn best_observed(y: &[f64], direction: Direction) -> f64 {
    match direction {
        Direction::Minimize => y.iter().copied().fold(f64::INFINITY, f64::min),
        Direction::Maximize => y.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// The `batch_size` highest-scoring pool points, best first, ties to the
/// lowest pool index. K-center batches come from the greedy diversity
/// procedure seeded with the model's training inputs.
pub fn select_candidates(pool: &[Candidate], model: &GpModel, spec: &AcquisitionSpec) -> Result<Vec<ScoredCandidate>> {
    if pool.is_empty() {
        return Err(input("candidate pool is empty"));
    }
    if spec.batch_size == 0 || spec.batch_size > pool.len() {
        return Err(input(format!("batch_size {} must be in 1..={}", spec.batch_size, pool.len())));
    }
    let scores = score_pool(pool, model, spec)?;
    let order: Vec<usize> = if spec.kind == AcquisitionKind::KCenter {
        let labeled: Vec<Candidate> = model.train_x().iter().map(|x| Candidate::new(x.clone())).collect();
        greedy_k_center_indices(pool, &labeled, spec.batch_size)?
    } else {
        let mut idx: Vec<usize> = (0..pool.len()).collect();
        idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        idx.truncate(spec.batch_size);
        idx
    };
    Ok(order
        .into_iter()
        .map(|i| ScoredCandidate { pool_index: i, candidate: pool[i].clone(), score: scores[i] })
        .collect())
}
