//! Sweep of the agent-count scaling models.

use std::path::PathBuf;

use almab_core::scaling::{
    amdahl_speedup, amdahl_time, coordination_time, efficiency_limited_time, gustafson_speedup, optimal_agents,
    parallel_efficiency, OptimalAgents,
};

use super::Context;
use crate::error::CliResult;
use crate::svg::{Chart, Series};
use crate::table::{sig6, Table};

pub const SCALING_COLUMNS: [&str; 9] = [
    "k",
    "amdahl_time",
    "amdahl_speedup",
    "gustafson_speedup",
    "efficiency",
    "efficiency_limited_time",
    "coordination_time",
    "k_star_closed_form",
    "k_star_numeric",
];

pub fn run(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let spec = &ctx.config.scaling;
    let p = &spec.params;
    // no finite optimum (p ∈ {0, 1} or α = 0) leaves the K* columns empty
    let optimum: Option<OptimalAgents> = optimal_agents(p).ok();
    let (closed, numeric) = match optimum {
        Some(o) => (sig6(o.closed_form), sig6(o.numeric)),
        None => (String::new(), String::new()),
    };

    let mut table = Table::new("almab scaling v1", &SCALING_COLUMNS);
    let (mut amdahl, mut gustafson, mut efficiency) = (Vec::new(), Vec::new(), Vec::new());
    for k in 1..=spec.k_max {
        let kf = k as f64;
        let s = amdahl_speedup(kf, p)?;
        let g = gustafson_speedup(kf, p)?;
        let eta = parallel_efficiency(kf, p)?;
        table.push(vec![
            k.to_string(),
            sig6(amdahl_time(kf, p)?),
            sig6(s),
            sig6(g),
            sig6(eta),
            sig6(efficiency_limited_time(kf, p)?),
            sig6(coordination_time(kf, p)?),
            closed.clone(),
            numeric.clone(),
        ]);
        amdahl.push((kf, s));
        gustafson.push((kf, g));
        efficiency.push((kf, eta));
    }

    let mut chart = Chart::new("Speedup and efficiency vs agent count", "agents K", "speedup / efficiency");
    chart.series.push(Series::line("Amdahl S(K)", amdahl));
    chart.series.push(Series::line("Gustafson S_G(K)", gustafson));
    chart.series.push(Series::line("efficiency η(K)", efficiency));
    if let Some(o) = optimum {
        let range = 1.0..=spec.k_max as f64;
        if range.contains(&o.closed_form) {
            chart.vlines.push(("K* closed".into(), o.closed_form));
        }
        if range.contains(&o.numeric) {
            chart.vlines.push(("K* numeric".into(), o.numeric));
        }
    }

    let mut written = Vec::new();
    ctx.write_table("scaling.csv", &table, &mut written)?;
    ctx.write_svg("scaling.svg", &chart, &mut written)?;
    Ok(written)
}
