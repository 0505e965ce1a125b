pub mod airfoil;
pub mod analyze;
pub mod compare;
pub mod scaling;
pub mod simulate;

use std::path::{Path, PathBuf};

use almab_core::stats::{bootstrap_ci, BootstrapSpec, ConfidenceInterval, Statistic};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::svg::Chart;
use crate::table::Table;

/// Resolved inputs shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
    /// Cap on concurrent agent workers; `None` uses one worker per agent.
    pub max_workers: Option<usize>,
}

impl Context {
    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub(crate) fn write_table(&self, name: &str, table: &Table, written: &mut Vec<PathBuf>) -> CliResult<()> {
        let path = self.path(name);
        table.write(&path)?;
        written.push(path);
        Ok(())
    }

    pub(crate) fn write_svg(&self, name: &str, chart: &Chart, written: &mut Vec<PathBuf>) -> CliResult<()> {
        let path = self.path(name);
        write_file(&path, chart.render().as_bytes())?;
        written.push(path);
        Ok(())
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    Statistic::Median.apply(&mut v)
}

pub(crate) fn median_ci(values: &[f64], seed: u64) -> CliResult<ConfidenceInterval> {
    Ok(bootstrap_ci(values, &BootstrapSpec { seed, ..Default::default() }, Statistic::Median)?)
}
