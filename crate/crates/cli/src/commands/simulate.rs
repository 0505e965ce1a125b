//! Replicated bandit runs: one run-history CSV per run and replicate, an
//! aggregate CSV and reward / landscape charts.

use std::path::PathBuf;

use almab_core::env::{true_mixture_mean, ArmEnvironment, MixtureArms};
use almab_core::sched::{run_distributed_with_workers, run_sequential, RunConfig, RunHistory};

use super::Context;
use crate::error::CliResult;
use crate::svg::{Chart, Series};
use crate::table::{sig6, Table, RUN_HISTORY_COLUMNS, RUN_HISTORY_SCHEMA};

/// Runs `config` on `env`; single-agent replicated runs use the sequential loop.
pub fn execute_run(env: &MixtureArms, config: &RunConfig, max_workers: Option<usize>) -> CliResult<RunHistory> {
    if config.agents == 1 && !config.independent_agents {
        Ok(run_sequential(env, config)?)
    } else {
        Ok(run_distributed_with_workers(env, config, max_workers)?)
    }
}

pub fn history_table(history: &RunHistory) -> Table {
    let mut table = Table::new(RUN_HISTORY_SCHEMA, &RUN_HISTORY_COLUMNS);
    let (mut regret, mut realized, mut comm) = (0.0, 0.0, 0.0);
    for r in &history.records {
        regret += r.regret_increment;
        realized += r.realized_regret_increment;
        comm += r.comm_cost;
        let arm = if history.config.independent_agents {
            r.arms.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(";")
        } else {
            r.arms[0].to_string()
        };
        table.push(vec![
            r.round.to_string(),
            arm,
            sig6(r.agent_rewards[0]),
            sig6(r.mean_reward),
            sig6(r.regret_increment),
            sig6(regret),
            sig6(realized),
            sig6(comm),
            r.issue_round().to_string(),
            r.apply_round.to_string(),
            sig6(r.clock_ms),
        ]);
    }
    table
}

pub fn run_history_name(run: usize, replicate: usize) -> String {
    format!("run{run}_rep{replicate}.csv")
}

fn run_label(config: &RunConfig) -> String {
    let policy = match config.policy {
        almab_core::bandit::Policy::Ucb => "UCB",
        almab_core::bandit::Policy::Thompson => "Thompson",
    };
    format!("{policy}, N={}", config.agents)
}

pub fn run(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let cfg = &ctx.config;
    let env = cfg.environment.mixture_arms()?;
    let mut written = Vec::new();
    let mut aggregate = Table::new(
        "almab simulate-aggregate v1",
        &["run", "round", "replicates", "reward_mean_agents_mean", "regret_pseudo_cum_mean"],
    );
    let mut reward_chart = Chart::new("Observed reward per round", "round", "mean reward");
    let mut landscape_stats = None;

    for (i, base) in cfg.runs.iter().enumerate() {
        let rounds = base.rounds as usize;
        let mut reward_sum = vec![0.0; rounds];
        let mut regret_sum = vec![0.0; rounds];
        for rep in 0..cfg.replicates {
            let mut run_cfg = base.clone();
            run_cfg.seed = cfg.seed.wrapping_add(base.seed).wrapping_add(rep as u64);
            let history = execute_run(&env, &run_cfg, ctx.max_workers)?;
            ctx.write_table(&run_history_name(i, rep), &history_table(&history), &mut written)?;
            let mut cum = 0.0;
            for (t, r) in history.records.iter().enumerate() {
                cum += r.regret_increment;
                reward_sum[t] += r.mean_reward;
                regret_sum[t] += cum;
            }
            if i == 0 && rep == 0 {
                landscape_stats = Some(history.final_stats.means().to_vec());
            }
        }
        let reps = cfg.replicates as f64;
        for t in 0..rounds {
            aggregate.push(vec![
                i.to_string(),
                (t + 1).to_string(),
                cfg.replicates.to_string(),
                sig6(reward_sum[t] / reps),
                sig6(regret_sum[t] / reps),
            ]);
        }
        let points = (0..rounds).map(|t| ((t + 1) as f64, reward_sum[t] / reps)).collect();
        reward_chart.series.push(Series::line(&format!("run {i} ({})", run_label(base)), points));
    }
    ctx.write_table("simulate_aggregate.csv", &aggregate, &mut written)?;
    ctx.write_svg("simulate_reward.svg", &reward_chart, &mut written)?;

    let estimates = landscape_stats.expect("at least one run");
    ctx.write_svg("simulate_landscape.svg", &landscape_chart(&env, &estimates)?, &mut written)?;
    Ok(written)
}

/// True landscape along the arm axis with one marker per arm at its
/// estimated value.
pub fn landscape_chart(env: &MixtureArms, estimates: &[f64]) -> CliResult<Chart> {
    let mut chart = Chart::new("True reward landscape and estimated arm values", "x", "reward");
    let first = env.arm_coords(0)[0];
    let last = env.arm_coords(env.arm_count() - 1)[0];
    let (lo, hi) = (first.min(last), first.max(last));
    let steps = 200;
    let curve = (0..=steps)
        .map(|k| {
            let x = lo + (hi - lo) * k as f64 / steps as f64;
            let mut coords = env.arm_coords(0).to_vec();
            coords[0] = x;
            Ok((x, true_mixture_mean(&coords, env.mixture())?))
        })
        .collect::<CliResult<Vec<_>>>()?;
    chart.series.push(Series::line("true mean", curve));
    let marks = (0..env.arm_count()).map(|a| (env.arm_coords(a)[0], estimates[a])).collect();
    chart.series.push(Series::markers("estimated arm value", marks));
    Ok(chart)
}
