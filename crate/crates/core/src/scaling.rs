//! Analytical parallel-scaling models: Amdahl and Gustafson speedups,
//! communication-limited efficiency, and the optimal agent count.

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingParams {
    /// Serial (non-parallelizable) fraction of the workload.
    pub serial_fraction: f64,
    /// Constant parallel efficiency used by the Amdahl formulas.
    pub efficiency: f64,
    pub comm_alpha: f64,
    pub comm_beta: f64,
    /// Per-task compute costs; only their sum matters.
    pub task_costs: Vec<f64>,
}

impl Default for ScalingParams {
    fn default() -> Self {
        Self { serial_fraction: 0.05, efficiency: 1.0, comm_alpha: 0.01, comm_beta: 0.5, task_costs: vec![1.0; 100] }
    }
}

impl ScalingParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.serial_fraction) {
            return Err(input("serial_fraction must lie in [0, 1]"));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(input("efficiency must lie in (0, 1]"));
        }
        if !(self.comm_alpha >= 0.0) {
            return Err(input("comm_alpha must be >= 0"));
        }
        if !(0.5..=1.0).contains(&self.comm_beta) {
            return Err(input("comm_beta must lie in [0.5, 1]"));
        }
        if self.task_costs.iter().any(|c| !(*c >= 0.0)) {
            return Err(input("task costs must be >= 0"));
        }
        Ok(())
    }

    pub fn total_cost(&self) -> f64 {
        self.task_costs.iter().sum()
    }
}

fn check_agents(k: f64) -> Result<()> {
    if !(k >= 1.0) {
        return Err(input("agent count must be at least 1"));
    }
    Ok(())
}

/// `T_K = (1−p) ΣC / (ηK) + p ΣC`.
pub fn amdahl_time(k: f64, params: &ScalingParams) -> Result<f64> {
    check_agents(k)?;
    let c = params.total_cost();
    let p = params.serial_fraction;
    Ok((1.0 - p) * c / (params.efficiency * k) + p * c)
}

/// `S(K) = 1 / (p + (1−p)/(ηK))`.
pub fn amdahl_speedup(k: f64, params: &ScalingParams) -> Result<f64> {
    check_agents(k)?;
    let p = params.serial_fraction;
    Ok(1.0 / (p + (1.0 - p) / (params.efficiency * k)))
}

/// `S_G(K) = p + (1−p) K`.
pub fn gustafson_speedup(k: f64, params: &ScalingParams) -> Result<f64> {
    check_agents(k)?;
    let p = params.serial_fraction;
    Ok(p + (1.0 - p) * k)
}

/// `η(K) = 1 / (1 + α K^β)`.
pub fn parallel_efficiency(k: f64, params: &ScalingParams) -> Result<f64> {
    check_agents(k)?;
    Ok(1.0 / (1.0 + params.comm_alpha * k.powf(params.comm_beta)))
}

/// Amdahl time with the constant efficiency replaced by `η(K)`:
/// `(1−p) ΣC (1 + αK^β) / K + p ΣC`.
///
/// For β ≤ 1 this is non-increasing in K, so it has no interior optimum.
pub fn efficiency_limited_time(k: f64, params: &ScalingParams) -> Result<f64> {
    check_agents(k)?;
    let c = params.total_cost();
    let p = params.serial_fraction;
    Ok((1.0 - p) * c * (1.0 + params.comm_alpha * k.powf(params.comm_beta)) / k + p * c)
}

/// Wall-clock model whose stationary point is the closed-form optimum:
/// parallel work `(1−p) ΣC / K` plus a serial coordination phase that grows
/// as `p ΣC (1 + αK^β)`.
pub fn coordination_time(k: f64, params: &ScalingParams) -> Result<f64> {
    check_agents(k)?;
    let c = params.total_cost();
    let p = params.serial_fraction;
    Ok((1.0 - p) * c / k + p * c * (1.0 + params.comm_alpha * k.powf(params.comm_beta)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalAgents {
    /// `((1−p) / (αβp))^(1/(1+β))`.
    pub closed_form: f64,
    /// Golden-section argmin of [`coordination_time`] over `[1, 10⁶]`.
    pub numeric: f64,
}

pub const MAX_AGENTS: f64 = 1e6;

pub fn optimal_agents(params: &ScalingParams) -> Result<OptimalAgents> {
    let p = params.serial_fraction;
    let (alpha, beta) = (params.comm_alpha, params.comm_beta);
    if !(p > 0.0 && p < 1.0) {
        return Err(input("no finite optimal agent count: serial fraction must lie strictly in (0, 1)"));
    }
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(input("no finite optimal agent count: communication cost must grow (alpha, beta > 0)"));
    }
    if !(params.total_cost() > 0.0) {
        return Err(input("no finite optimal agent count: total task cost is zero"));
    }
    let closed_form = ((1.0 - p) / (alpha * beta * p)).powf(1.0 / (1.0 + beta));
    let numeric = golden_section_min(|k| coordination_time(k, params).expect("k within [1, max]"), 1.0, MAX_AGENTS);
    Ok(OptimalAgents { closed_form, numeric })
}

/// Minimizes a unimodal `f` on `[lo, hi]`, searching in log-space so the
/// bracket shrinks relative to the argmin's magnitude.
fn golden_section_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let g = |u: f64| f(u.exp());
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = g(d);
        }
    }
    (0.5 * (a + b)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(p: f64, eta: f64, alpha: f64, beta: f64, total: f64) -> ScalingParams {
        ScalingParams { serial_fraction: p, efficiency: eta, comm_alpha: alpha, comm_beta: beta, task_costs: vec![total] }
    }

    #[test]
    fn amdahl_time_examples() {
        for k in [1.0, 4.0, 100.0] {
            assert_eq!(amdahl_time(k, &params(1.0, 1.0, 0.0, 1.0, 50.0)).unwrap(), 50.0);
            assert!((amdahl_time(k, &params(0.0, 1.0, 0.0, 1.0, 50.0)).unwrap() - 50.0 / k).abs() < 1e-12);
        }
        assert!((amdahl_time(8.0, &params(0.1, 1.0, 0.0, 1.0, 100.0)).unwrap() - 21.25).abs() < 1e-12);
        assert!(amdahl_time(0.0, &ScalingParams::default()).is_err());
    }

    #[test]
    fn speedup_examples() {
        assert!((amdahl_speedup(4.0, &params(0.0, 1.0, 0.0, 1.0, 1.0)).unwrap() - 4.0).abs() < 1e-12);
        assert!((amdahl_speedup(8.0, &params(0.1, 1.0, 0.0, 1.0, 1.0)).unwrap() - 4.7059).abs() < 1e-4);
        let p = params(0.1, 1.0, 0.0, 1.0, 1.0);
        for k in 1..200 {
            assert!(amdahl_speedup(k as f64, &p).unwrap() <= 10.0 + 1e-12);
        }
        assert!((gustafson_speedup(1.0, &p).unwrap() - 1.0).abs() < 1e-15);
        assert!((gustafson_speedup(8.0, &p).unwrap() - 7.3).abs() < 1e-12);
    }

    #[test]
    fn efficiency_examples() {
        let none = params(0.1, 1.0, 0.0, 0.7, 1.0);
        assert_eq!(parallel_efficiency(37.0, &none).unwrap(), 1.0);
        let half = params(0.1, 1.0, 0.01, 1.0, 1.0);
        assert!((parallel_efficiency(100.0, &half).unwrap() - 0.5).abs() < 1e-12);
        let mut prev = 1.0;
        for k in 2..=10_000 {
            let e = parallel_efficiency(k as f64, &half).unwrap();
            assert!(e < prev);
            prev = e;
        }
    }

    #[test]
    fn closed_form_optimum_reference_value() {
        let opt = optimal_agents(&params(0.05, 1.0, 0.01, 0.5, 1.0)).unwrap();
        assert!((opt.closed_form - 243.6).abs() < 0.5, "{}", opt.closed_form);
        assert!((opt.numeric - opt.closed_form).abs() / opt.closed_form < 1e-6);
    }

    #[test]
    fn closed_form_decreasing_in_alpha() {
        let mut prev = f64::INFINITY;
        for alpha in [0.001, 0.005, 0.01, 0.05, 0.2] {
            let k = optimal_agents(&params(0.05, 1.0, alpha, 0.5, 1.0)).unwrap().closed_form;
            assert!(k < prev);
            prev = k;
        }
    }

    #[test]
    fn numeric_optimum_is_stationary_and_local_minimum() {
        let p = params(0.05, 1.0, 0.01, 0.5, 100.0);
        let k = optimal_agents(&p).unwrap().numeric;
        let t = |k: f64| coordination_time(k, &p).unwrap();
        let h = 1e-3 * k;
        let slope = (t(k + h) - t(k - h)) / (2.0 * h);
        assert!(slope.abs() < 1e-6 * t(k), "slope {slope}");
        assert!(t(k * 1.01) > t(k) && t(k * 0.99) > t(k));
    }

    #[test]
    fn efficiency_limited_model_has_no_interior_optimum() {
        let p = params(0.05, 1.0, 0.01, 0.5, 100.0);
        let mut prev = f64::INFINITY;
        for k in (0..=60).map(|i| 10f64.powf(i as f64 / 10.0)) {
            let t = efficiency_limited_time(k, &p).unwrap();
            assert!(t <= prev);
            prev = t;
        }
    }

    #[test]
    fn optimal_agents_degenerate_inputs() {
        assert!(optimal_agents(&params(0.0, 1.0, 0.01, 0.5, 1.0)).is_err());
        assert!(optimal_agents(&params(1.0, 1.0, 0.01, 0.5, 1.0)).is_err());
        assert!(optimal_agents(&params(0.1, 1.0, 0.0, 0.5, 1.0)).is_err());
    }

    proptest! {
        #[test]
        fn speedup_times_time_is_serial_work(p in 0.0f64..1.0, eta in 0.05f64..1.0, k in 1.0f64..1e4, total in 0.1f64..1e3) {
            let s = params(p, eta, 0.0, 1.0, total);
            let lhs = amdahl_speedup(k, &s).unwrap() * amdahl_time(k, &s).unwrap();
            prop_assert!((lhs - total).abs() <= 1e-12 * total);
            let ideal = params(p, 1.0, 0.0, 1.0, total);
            let lhs = amdahl_speedup(k, &ideal).unwrap() * amdahl_time(k, &ideal).unwrap();
            prop_assert!((lhs - amdahl_time(1.0, &ideal).unwrap()).abs() <= 1e-12 * total);
        }

        #[test]
        fn efficiency_identity(alpha in 0.0f64..5.0, beta in 0.5f64..1.0, k in 1.0f64..1e5) {
            let s = params(0.1, 1.0, alpha, beta, 1.0);
            let eta = parallel_efficiency(k, &s).unwrap();
            prop_assert!(eta > 0.0 && eta <= 1.0);
            prop_assert!((eta * (1.0 + alpha * k.powf(beta)) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn gustafson_dominates_amdahl(p in 0.001f64..0.999, k in 1.0f64..1e4) {
            let s = params(p, 1.0, 0.0, 1.0, 1.0);
            prop_assert!(gustafson_speedup(k, &s).unwrap() >= amdahl_speedup(k, &s).unwrap() - 1e-12);
        }
    }
}
