//! Experiment configuration: one JSON document, unknown keys rejected.

use std::path::{Path, PathBuf};

use almab_core::acquisition::{AcquisitionKind, AcquisitionSpec, Direction};
use almab_core::bandit::Policy;
use almab_core::env::{DragSurfaceSpec, Mixture, MixtureArms, MixtureSpec};
use almab_core::scaling::ScalingParams;
use almab_core::sched::{ClockSource, RunConfig};
use almab_core::stats::{BootstrapSpec, Statistic};
use almab_core::surrogate::GpParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    Compare,
    Airfoil,
    Scaling,
    Analyze,
}

fn default_arm_count() -> usize {
    15
}

fn default_upper() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    /// Gaussian-mixture reward over `arms` evenly spaced points of
    /// `[lower, upper]`.
    Mixture {
        #[serde(default = "MixtureSpec::reference")]
        mixture: MixtureSpec,
        #[serde(default = "default_arm_count")]
        arms: usize,
        #[serde(default)]
        lower: f64,
        #[serde(default = "default_upper")]
        upper: f64,
        #[serde(default)]
        eval_cost_ms: f64,
    },
    /// Mock drag surface over camber × thickness.
    Drag {
        #[serde(default)]
        surface: DragSurfaceSpec,
    },
}

impl Default for EnvironmentSpec {
    fn default() -> Self {
        Self::reference_mixture(0.0)
    }
}

impl EnvironmentSpec {
    pub fn reference_mixture(eval_cost_ms: f64) -> Self {
        EnvironmentSpec::Mixture { mixture: MixtureSpec::reference(), arms: 15, lower: 0.0, upper: 1.0, eval_cost_ms }
    }

    pub fn mixture_arms(&self) -> CliResult<MixtureArms> {
        match self {
            EnvironmentSpec::Mixture { mixture, arms, lower, upper, eval_cost_ms } => Ok(MixtureArms::uniform_grid(
                Mixture::new(mixture.clone())?,
                *arms,
                *lower,
                *upper,
                *eval_cost_ms,
            )?),
            EnvironmentSpec::Drag { .. } => Err(CliError::Config("this subcommand needs a mixture environment".into())),
        }
    }

    pub fn drag_surface(&self) -> CliResult<&DragSurfaceSpec> {
        match self {
            EnvironmentSpec::Drag { surface } => Ok(surface),
            EnvironmentSpec::Mixture { .. } => Err(CliError::Config("airfoil needs a drag environment".into())),
        }
    }

    fn validate(&self) -> CliResult<()> {
        match self {
            EnvironmentSpec::Mixture { .. } => self.mixture_arms().map(|_| ()),
            EnvironmentSpec::Drag { surface } => Ok(surface.validate()?),
        }
    }
}

fn default_sequential() -> RunConfig {
    RunConfig::new(150, 1, Policy::Ucb, 0)
}

fn default_distributed() -> RunConfig {
    RunConfig::new(150, 4, Policy::Ucb, 0)
}

fn default_true() -> bool {
    true
}

fn default_clock() -> ClockSource {
    ClockSource::Emulated
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSpec {
    #[serde(default = "default_sequential")]
    pub sequential: RunConfig,
    #[serde(default = "default_distributed")]
    pub distributed: RunConfig,
    /// Give the distributed run the sequential run's evaluation count
    /// (`rounds × agents`) instead of its own `rounds`.
    #[serde(default = "default_true")]
    pub equal_evaluation_budget: bool,
    #[serde(default = "default_clock")]
    pub clock: ClockSource,
}

impl Default for CompareSpec {
    fn default() -> Self {
        Self {
            sequential: default_sequential(),
            distributed: default_distributed(),
            equal_evaluation_budget: true,
            clock: default_clock(),
        }
    }
}

fn default_initial_points() -> usize {
    5
}

fn default_iterations() -> usize {
    10
}

fn default_grid() -> usize {
    41
}

fn default_top_k() -> usize {
    5
}

fn default_airfoil_surrogate() -> GpParams {
    GpParams { lengthscale: 0.5, signal_var: 1.0, noise_var: 0.1 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AirfoilSpec {
    #[serde(default = "default_initial_points")]
    pub initial_points: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    /// Candidate grid resolution per axis.
    #[serde(default = "default_grid")]
    pub grid_per_axis: usize,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    /// Surrogate hyperparameters in unit-box, standardized-output units.
    #[serde(default = "default_airfoil_surrogate")]
    pub surrogate: GpParams,
}

impl Default for AirfoilSpec {
    fn default() -> Self {
        Self {
            initial_points: default_initial_points(),
            iterations: default_iterations(),
            grid_per_axis: default_grid(),
            top_k: default_top_k(),
            surrogate: default_airfoil_surrogate(),
        }
    }
}

fn default_k_max() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    #[serde(default)]
    pub params: ScalingParams,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

impl Default for ScalingSpec {
    fn default() -> Self {
        Self { params: ScalingParams::default(), k_max: default_k_max() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeGroup {
    pub name: String,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// Value in the final row.
    Last,
    /// Mean over all rows.
    Mean,
}

fn default_metric() -> String {
    "regret_pseudo_cum".into()
}

fn default_reduction() -> Reduction {
    Reduction::Last
}

fn default_statistic() -> Statistic {
    Statistic::Mean
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeSpec {
    /// Groups of run-history CSVs; when empty, the simulate outputs found in
    /// the output directory are grouped by run index.
    #[serde(default)]
    pub groups: Vec<AnalyzeGroup>,
    #[serde(default = "default_metric")]
    pub metric: String,
    #[serde(default = "default_reduction")]
    pub reduction: Reduction,
    #[serde(default = "default_statistic")]
    pub statistic: Statistic,
    #[serde(default)]
    pub bootstrap: BootstrapSpec,
}

impl Default for AnalyzeSpec {
    fn default() -> Self {
        Self {
            groups: Vec::new(),
            metric: default_metric(),
            reduction: default_reduction(),
            statistic: default_statistic(),
            bootstrap: BootstrapSpec::default(),
        }
    }
}

fn default_runs() -> Vec<RunConfig> {
    vec![default_sequential()]
}

fn default_airfoil_acquisition() -> AcquisitionSpec {
    AcquisitionSpec { kind: AcquisitionKind::ExpectedImprovement, batch_size: 1, direction: Direction::Minimize }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_replicates() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub environment: EnvironmentSpec,
    /// Runs for `simulate`. A run's `seed` is an offset added to the
    /// experiment seed and the replicate index.
    #[serde(default = "default_runs")]
    pub runs: Vec<RunConfig>,
    /// Acquisition used by `airfoil`.
    #[serde(default = "default_airfoil_acquisition")]
    pub acquisition: AcquisitionSpec,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub compare: CompareSpec,
    #[serde(default)]
    pub airfoil: AirfoilSpec,
    #[serde(default)]
    pub scaling: ScalingSpec,
    #[serde(default)]
    pub analyze: AnalyzeSpec,
}

impl ExperimentConfig {
    /// Built-in configuration used when no `--config` is given.
    pub fn default_for(command: Subcommand) -> Self {
        let mut config: Self = serde_json::from_str("{}").expect("all fields default");
        match command {
            Subcommand::Simulate => {
                let mut distributed = default_distributed();
                distributed.agents = 4;
                config.runs = vec![default_sequential(), distributed];
            }
            Subcommand::Compare => {
                config.environment = EnvironmentSpec::reference_mixture(10.0);
                config.replicates = 20;
            }
            Subcommand::Airfoil => {
                config.environment = EnvironmentSpec::Drag { surface: DragSurfaceSpec::default() };
            }
            Subcommand::Scaling | Subcommand::Analyze => {}
        }
        config
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks everything `command` will use before any run starts.
    pub fn validate(&self, command: Subcommand) -> CliResult<()> {
        if self.replicates == 0 {
            return Err(CliError::Config("replicates must be >= 1".into()));
        }
        self.environment.validate()?;
        match command {
            Subcommand::Simulate => {
                self.environment.mixture_arms()?;
                if self.runs.is_empty() {
                    return Err(CliError::Config("simulate needs at least one run".into()));
                }
                for (i, run) in self.runs.iter().enumerate() {
                    run.validate().map_err(|e| CliError::Config(format!("runs[{i}]: {e}")))?;
                }
            }
            Subcommand::Compare => {
                let env = self.environment.mixture_arms()?;
                if almab_core::env::ArmEnvironment::eval_cost_ms(&env) <= 0.0 {
                    return Err(CliError::Config("compare needs eval_cost_ms > 0 in the environment".into()));
                }
                if self.compare.sequential.agents != 1 {
                    return Err(CliError::Config("compare.sequential must use exactly one agent".into()));
                }
                self.compare.sequential.validate().map_err(|e| CliError::Config(format!("compare.sequential: {e}")))?;
                self.compare.distributed.validate().map_err(|e| CliError::Config(format!("compare.distributed: {e}")))?;
            }
            Subcommand::Airfoil => {
                self.environment.drag_surface()?;
                let a = &self.airfoil;
                if a.initial_points == 0 || a.grid_per_axis < 2 || a.top_k == 0 {
                    return Err(CliError::Config(
                        "airfoil needs initial_points >= 1, grid_per_axis >= 2 and top_k >= 1".into(),
                    ));
                }
                a.surrogate.validate()?;
                if self.acquisition.batch_size != 1 {
                    return Err(CliError::Config("airfoil evaluates one design per iteration (batch_size = 1)".into()));
                }
            }
            Subcommand::Scaling => {
                self.scaling.params.validate()?;
                if self.scaling.k_max == 0 {
                    return Err(CliError::Config("scaling.k_max must be >= 1".into()));
                }
            }
            Subcommand::Analyze => {
                let b = &self.analyze.bootstrap;
                if b.resamples < 100 || !(b.alpha > 0.0 && b.alpha < 1.0) {
                    return Err(CliError::Config("analyze.bootstrap needs resamples >= 100 and alpha in (0, 1)".into()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_uses_defaults() {
        let c = ExperimentConfig::parse("{}").unwrap();
        assert_eq!(c.replicates, 1);
        assert_eq!(c.environment, EnvironmentSpec::default());
        assert_eq!(c.airfoil.grid_per_axis, 41);
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = ExperimentConfig::parse("{\n  \"seed\": 1,\n  \"replicate\": 3\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("replicate") && msg.contains("line 3"), "{msg}");
        assert_eq!(err.exit_code(), 2);
        let nested = r#"{"runs": [{"rounds": 5, "agents": 1, "policy": "ucb", "delay": 2}]}"#;
        assert!(ExperimentConfig::parse(nested).is_err());
        let env = r#"{"environment": {"kind": "drag", "surface": {"camber": 0.1}}}"#;
        assert!(ExperimentConfig::parse(env).is_err());
    }

    #[test]
    fn round_trip_preserves_everything() {
        for cmd in [Subcommand::Simulate, Subcommand::Compare, Subcommand::Airfoil, Subcommand::Scaling] {
            let c = ExperimentConfig::default_for(cmd);
            let again = ExperimentConfig::parse(&c.to_json()).unwrap();
            assert_eq!(c, again);
            c.validate(cmd).unwrap();
        }
    }

    #[test]
    fn subcommand_environment_checks() {
        let c = ExperimentConfig::default_for(Subcommand::Simulate);
        assert!(c.validate(Subcommand::Airfoil).is_err());
        assert!(c.validate(Subcommand::Compare).is_err());
        let mut bad = c.clone();
        bad.runs[0].agents = 0;
        assert!(bad.validate(Subcommand::Simulate).is_err());
    }
}
