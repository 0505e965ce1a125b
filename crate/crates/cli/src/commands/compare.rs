//! Sequential vs distributed comparison over seeded replicates.

use std::path::PathBuf;

use almab_core::sched::wall_clock_compare;
use almab_core::stats::wilcoxon_signed_rank;

use super::{median, median_ci, Context};
use crate::error::CliResult;
use crate::table::{sig6, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateResult {
    pub wall_clock_s: [f64; 2],
    pub cumulative_regret: [f64; 2],
    pub mean_reward: [f64; 2],
    pub speedup: f64,
}

const MODES: [&str; 2] = ["sequential", "distributed"];

pub const COMPARE_COLUMNS: [&str; 10] = [
    "mode",
    "replicate",
    "wall_clock_s",
    "cumulative_regret",
    "mean_reward",
    "speedup",
    "regret_ci_lower",
    "regret_ci_upper",
    "speedup_ci_lower",
    "speedup_ci_upper",
];

pub fn replicates(ctx: &Context) -> CliResult<Vec<ReplicateResult>> {
    let cfg = &ctx.config;
    let spec = &cfg.compare;
    let env = cfg.environment.mixture_arms()?;
    (0..cfg.replicates)
        .map(|rep| {
            let mut seq = spec.sequential.clone();
            seq.seed = cfg.seed.wrapping_add(seq.seed).wrapping_add(rep as u64);
            let mut dist = spec.distributed.clone();
            dist.seed = cfg.seed.wrapping_add(dist.seed).wrapping_add(rep as u64);
            if spec.equal_evaluation_budget {
                dist = dist.with_evaluation_budget(seq.rounds);
            }
            let c = wall_clock_compare(&env, &seq, &dist, spec.clock, ctx.max_workers)?;
            Ok(ReplicateResult {
                wall_clock_s: [c.sequential.wall_clock_s, c.distributed.wall_clock_s],
                cumulative_regret: [c.sequential.cumulative_regret, c.distributed.cumulative_regret],
                mean_reward: [c.sequential.mean_reward, c.distributed.mean_reward],
                speedup: c.speedup,
            })
        })
        .collect()
}

pub fn run(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let results = replicates(ctx)?;
    let seed = ctx.config.seed;
    let mut table = Table::new("almab compare v1", &COMPARE_COLUMNS);
    for (rep, r) in results.iter().enumerate() {
        for (m, mode) in MODES.iter().enumerate() {
            let speedup = if m == 0 { 1.0 } else { r.speedup };
            table.push(vec![
                mode.to_string(),
                rep.to_string(),
                sig6(r.wall_clock_s[m]),
                sig6(r.cumulative_regret[m]),
                sig6(r.mean_reward[m]),
                sig6(speedup),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ]);
        }
    }
    // aggregate rows: medians with bootstrap intervals of the median
    let speedups: Vec<f64> = results.iter().map(|r| r.speedup).collect();
    for (m, mode) in MODES.iter().enumerate() {
        let walls: Vec<f64> = results.iter().map(|r| r.wall_clock_s[m]).collect();
        let regrets: Vec<f64> = results.iter().map(|r| r.cumulative_regret[m]).collect();
        let rewards: Vec<f64> = results.iter().map(|r| r.mean_reward[m]).collect();
        let regret_ci = median_ci(&regrets, seed)?;
        let (speedup, s_lo, s_hi) = if m == 0 {
            (1.0, 1.0, 1.0)
        } else {
            let ci = median_ci(&speedups, seed)?;
            (median(&speedups), ci.lower, ci.upper)
        };
        table.push(vec![
            mode.to_string(),
            "aggregate".into(),
            sig6(median(&walls)),
            sig6(median(&regrets)),
            sig6(median(&rewards)),
            sig6(speedup),
            sig6(regret_ci.lower),
            sig6(regret_ci.upper),
            sig6(s_lo),
            sig6(s_hi),
        ]);
    }
    let mut written = Vec::new();
    ctx.write_table("compare.csv", &table, &mut written)?;

    let mut tests = Table::new("almab compare-tests v1", &["metric", "pairs", "statistic", "z", "p_value", "note"]);
    let seq: Vec<f64> = results.iter().map(|r| r.cumulative_regret[0]).collect();
    let dist: Vec<f64> = results.iter().map(|r| r.cumulative_regret[1]).collect();
    match wilcoxon_signed_rank(&seq, &dist) {
        Ok(w) => tests.push(vec![
            "cumulative_regret".into(),
            w.n.to_string(),
            sig6(w.statistic),
            sig6(w.z),
            sig6(w.p_value),
            String::new(),
        ]),
        Err(e) => tests.push(vec![
            "cumulative_regret".into(),
            results.len().to_string(),
            "NA".into(),
            "NA".into(),
            "NA".into(),
            e.to_string(),
        ]),
    }
    ctx.write_table("compare_tests.csv", &tests, &mut written)?;
    Ok(written)
}
