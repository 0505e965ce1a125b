//! Pseudo-regret ledgers and closed-form regret envelopes.

use std::f64::consts::PI;

use crate::error::{input, Result};

/// One round of a ledger: the arm each agent pulled and the communication
/// cost charged to the round.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub round: u64,
    pub arms: Vec<usize>,
    pub comm_cost: f64,
}

/// Per-round record of choices against known true arm means.
///
/// Regret is measured on true means (pseudo-regret), so it is a
/// deterministic function of the choice sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretLedger {
    true_means: Vec<f64>,
    mu_star: f64,
    lambda: f64,
    entries: Vec<LedgerEntry>,
}

impl RegretLedger {
    pub fn new(true_means: Vec<f64>, lambda: f64) -> Result<Self> {
        if true_means.is_empty() || true_means.iter().any(|m| !m.is_finite()) {
            return Err(input("ledger needs at least one finite arm mean"));
        }
        if !(lambda >= 0.0) {
            return Err(input("lambda must be >= 0"));
        }
        let mu_star = true_means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { true_means, mu_star, lambda, entries: Vec::new() })
    }

    pub fn mu_star(&self) -> f64 {
        self.mu_star
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn gap(&self, arm: usize) -> f64 {
        self.mu_star - self.true_means[arm]
    }

    pub fn record(&mut self, round: u64, arms: Vec<usize>, comm_cost: f64) -> Result<()> {
        if arms.is_empty() {
            return Err(input("a ledger entry needs at least one chosen arm"));
        }
        if let Some(&bad) = arms.iter().find(|&&a| a >= self.true_means.len()) {
            return Err(input(format!("arm {bad} out of range")));
        }
        if !(comm_cost >= 0.0) {
            return Err(input("communication cost must be >= 0"));
        }
        self.entries.push(LedgerEntry { round, arms, comm_cost });
        Ok(())
    }

    /// Adds communication cost to an existing round (costs are charged when
    /// delayed feedback is applied, which may be after the round was logged).
    pub fn add_comm_cost(&mut self, index: usize, cost: f64) {
        self.entries[index].comm_cost += cost;
    }

    /// Mean gap of the agents' choices in one entry.
    pub fn instantaneous_regret(&self, entry: &LedgerEntry) -> f64 {
        entry.arms.iter().map(|&a| self.gap(a)).sum::<f64>() / entry.arms.len() as f64
    }

    /// `Σₜ Σ_choices (μ* − μ_a)`: total pseudo-regret over every pull.
    pub fn cumulative_regret(&self) -> f64 {
        self.entries.iter().flat_map(|e| e.arms.iter()).map(|&a| self.gap(a)).sum()
    }

    /// `Σₜ (μ* − (1/N) Σⱼ μ_{aⱼᵗ})`; every round must hold exactly `agents`
    /// choices.
    pub fn distributed_regret(&self, agents: usize) -> Result<f64> {
        if agents == 0 {
            return Err(input("agent count must be positive"));
        }
        if let Some(e) = self.entries.iter().find(|e| e.arms.len() != agents) {
            return Err(input(format!(
                "round {} records {} choices, expected {agents}",
                e.round,
                e.arms.len()
            )));
        }
        Ok(self.entries.iter().map(|e| self.instantaneous_regret(e)).sum())
    }

    pub fn total_comm_cost(&self) -> f64 {
        self.entries.iter().map(|e| e.comm_cost).sum()
    }

    /// `R_dist + λ Σₜ C_comm(t)`.
    pub fn effective_regret(&self, agents: usize) -> Result<f64> {
        Ok(self.distributed_regret(agents)? + self.lambda * self.total_comm_cost())
    }

    /// Running cumulative regret after each entry (agent-averaged per round).
    pub fn regret_prefix(&self) -> Vec<f64> {
        self.entries
            .iter()
            .scan(0.0, |acc, e| {
                *acc += self.instantaneous_regret(e);
                Some(*acc)
            })
            .collect()
    }
}

/// `Σᵢ [8 ln T / Δᵢ + (1 + π²/3) Δᵢ]` over suboptimal arms.
pub fn ucb_regret_bound(gaps: &[f64], horizon: u64) -> Result<f64> {
    check_horizon(horizon)?;
    if gaps.iter().any(|g| !(*g > 0.0)) {
        return Err(input("suboptimality gaps must be positive"));
    }
    let log_t = (horizon as f64).ln();
    Ok(gaps.iter().map(|&g| 8.0 * log_t / g + (1.0 + PI * PI / 3.0) * g).sum())
}

/// `Σᵢ ln T / Δᵢ`, the Thompson-sampling order with unit constant. Reporting only.
pub fn ts_regret_order(gaps: &[f64], horizon: u64) -> Result<f64> {
    check_horizon(horizon)?;
    if gaps.iter().any(|g| !(*g > 0.0)) {
        return Err(input("suboptimality gaps must be positive"));
    }
    let log_t = (horizon as f64).ln();
    Ok(gaps.iter().map(|&g| log_t / g).sum())
}

/// `sqrt((T + τ_max) K ln T)` with unit constant. Reporting only.
pub fn delayed_regret_order(horizon: u64, arms: usize, tau_max: u64) -> Result<f64> {
    check_horizon(horizon)?;
    Ok(((horizon + tau_max) as f64 * arms as f64 * (horizon as f64).ln()).sqrt())
}

fn check_horizon(horizon: u64) -> Result<()> {
    if horizon < 2 {
        return Err(input("horizon must be at least 2"));
    }
    Ok(())
}
