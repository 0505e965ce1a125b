//! Bootstrap summaries and paired signed-rank tests over run-history CSVs.

use std::path::PathBuf;

use almab_core::stats::{bootstrap_ci, wilcoxon_signed_rank, Statistic};

use super::Context;
use crate::config::{AnalyzeGroup, Reduction};
use crate::error::{CliError, CliResult};
use crate::table::{read_table, sig6, Table};

/// Simulate outputs `run{i}_rep{r}.csv` in the output directory, grouped
/// by run and ordered by replicate.
pub fn discover_groups(ctx: &Context) -> CliResult<Vec<AnalyzeGroup>> {
    let dir = &ctx.out_dir;
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut found: Vec<(usize, usize, PathBuf)> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        let Some(stem) = name.strip_prefix("run").and_then(|s| s.strip_suffix(".csv")) else { continue };
        let Some((run, rep)) = stem.split_once("_rep") else { continue };
        if let (Ok(run), Ok(rep)) = (run.parse(), rep.parse()) {
            found.push((run, rep, path));
        }
    }
    found.sort();
    let mut groups: Vec<AnalyzeGroup> = Vec::new();
    for (run, _, path) in found {
        let name = format!("run{run}");
        match groups.last_mut() {
            Some(g) if g.name == name => g.files.push(path),
            _ => groups.push(AnalyzeGroup { name, files: vec![path] }),
        }
    }
    if groups.is_empty() {
        return Err(CliError::Config(format!("no run-history CSVs (run<i>_rep<r>.csv) found in {}", dir.display())));
    }
    Ok(groups)
}

fn metric_value(path: &std::path::Path, metric: &str, reduction: Reduction) -> CliResult<f64> {
    let (header, rows) = read_table(path)?;
    let col = header
        .iter()
        .position(|h| h == metric)
        .ok_or_else(|| CliError::Config(format!("{}: no column named {metric}", path.display())))?;
    let values = rows
        .iter()
        .map(|row| {
            row[col].parse::<f64>().map_err(|e| CliError::Io(format!("{}: bad value {:?}: {e}", path.display(), row[col])))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    if values.is_empty() {
        return Err(CliError::Io(format!("{}: no data rows", path.display())));
    }
    Ok(match reduction {
        Reduction::Last => values[values.len() - 1],
        Reduction::Mean => values.iter().sum::<f64>() / values.len() as f64,
    })
}

pub fn run(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let spec = &ctx.config.analyze;
    let groups = if spec.groups.is_empty() { discover_groups(ctx)? } else { spec.groups.clone() };
    let values = groups
        .iter()
        .map(|g| g.files.iter().map(|f| metric_value(f, &spec.metric, spec.reduction)).collect::<CliResult<Vec<f64>>>())
        .collect::<CliResult<Vec<Vec<f64>>>>()?;

    let statistic = match spec.statistic {
        Statistic::Mean => "mean",
        Statistic::Median => "median",
    };
    let mut summary =
        Table::new("almab analyze-summary v1", &["group", "n", "metric", "statistic", "estimate", "ci_lower", "ci_upper"]);
    for (g, v) in groups.iter().zip(&values) {
        let ci = bootstrap_ci(v, &spec.bootstrap, spec.statistic)?;
        summary.push(vec![
            g.name.clone(),
            v.len().to_string(),
            spec.metric.clone(),
            statistic.into(),
            sig6(ci.estimate),
            sig6(ci.lower),
            sig6(ci.upper),
        ]);
    }

    let mut tests = Table::new(
        "almab analyze-tests v1",
        &["group_a", "group_b", "pairs", "statistic", "z", "p_value", "note"],
    );
    for a in 0..groups.len() {
        for b in a + 1..groups.len() {
            let names = vec![groups[a].name.clone(), groups[b].name.clone()];
            let row = match wilcoxon_signed_rank(&values[a], &values[b]) {
                Ok(w) => vec![w.n.to_string(), sig6(w.statistic), sig6(w.z), sig6(w.p_value), String::new()],
                Err(e) => vec![values[a].len().min(values[b].len()).to_string(), "NA".into(), "NA".into(), "NA".into(), e.to_string()],
            };
            tests.push(names.into_iter().chain(row).collect());
        }
    }

    let mut written = Vec::new();
    ctx.write_table("analyze_summary.csv", &summary, &mut written)?;
    ctx.write_table("analyze_tests.csv", &tests, &mut written)?;
    Ok(written)
}
