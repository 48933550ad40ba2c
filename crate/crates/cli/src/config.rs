//! TOML experiment description. Every section rejects unknown keys.

use std::path::{Path, PathBuf};

use ionflux::bvp::BvpOptions;
use ionflux::matching::{SolverOptions, SweepParameter};
use ionflux::zero_current::ZeroCurrentMode;
use ionflux::{AreaProfile, BoundaryData, ChannelGeometry, IonPair, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Sweep,
    ZeroCurrent,
    Reversal,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::ZeroCurrent => "zero-current",
            Command::Reversal => "reversal",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

fn one() -> f64 {
    1.0
}

fn minus_one() -> f64 {
    -1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    #[serde(default = "one")]
    pub z1: f64,
    #[serde(default = "minus_one")]
    pub z2: f64,
    #[serde(default)]
    pub d: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub l1: f64,
    pub l2: f64,
    pub r1: f64,
    pub r2: f64,
    pub a: f64,
    pub b: f64,
    #[serde(rename = "Q2", default)]
    pub q2: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub geometry: AreaProfile,
}

impl ModelBlock {
    pub fn to_model(&self) -> ionflux::Result<ModelSpec> {
        ModelSpec::new(
            IonPair::new(self.z1, self.z2, self.d, self.lambda)?,
            BoundaryData { v: self.v, l1: self.l1, l2: self.l2, r1: self.r1, r2: self.r2 },
            ChannelGeometry::new(self.geometry.clone(), self.a, self.b)?,
            self.q2,
            self.epsilon,
        )
    }
}

/// Either an explicit `values` list or `points` evenly spaced values from `start` to `stop`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub parameter: SweepParameter,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
    pub values: Option<Vec<f64>>,
}

impl SweepBlock {
    pub fn grid(&self) -> CliResult<Vec<f64>> {
        let grid = match (&self.values, self.start, self.stop, self.points) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(lo), Some(hi), Some(n)) => linspace(lo, hi, n),
            _ => return Err(CliError::Config("sweep needs either `values` or all of `start`, `stop`, `points`".into())),
        };
        if grid.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Config("sweep values must be finite".into()));
        }
        let up = grid.windows(2).all(|w| w[1] > w[0]);
        let down = grid.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(CliError::Config("sweep grid must be strictly monotone".into()));
        }
        Ok(grid)
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { directory: PathBuf::from("ionflux-out"), formats: vec![Format::Csv, Format::Json, Format::Svg] }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveBlock {
    /// Also run the direct solver at the model `ε` and overlay its profile.
    pub direct: bool,
    pub samples_per_region: usize,
}

impl Default for SolveBlock {
    fn default() -> Self {
        Self { direct: false, samples_per_region: ionflux::matching::DEFAULT_SAMPLES_PER_REGION }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZeroCurrentBlock {
    pub mode: ZeroCurrentMode,
}

impl Default for ZeroCurrentBlock {
    fn default() -> Self {
        Self { mode: ZeroCurrentMode::Reversal }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateBlock {
    pub epsilons: Vec<f64>,
    pub d: Vec<f64>,
    /// Largest relative flux error allowed at the smallest `ε`.
    pub rel_tol: f64,
    /// Smallest acceptable log-log slope of the error in `d`.
    pub min_d_order: f64,
}

impl Default for ValidateBlock {
    fn default() -> Self {
        Self { epsilons: vec![1e-2, 3e-3, 1e-3], d: vec![0.0, 0.01, 0.02], rel_tol: 0.02, min_d_order: 1.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; when present it must name the command given on the command line.
    pub command: Option<Command>,
    pub model: ModelBlock,
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub solve: SolveBlock,
    #[serde(default)]
    pub zero_current: ZeroCurrentBlock,
    #[serde(default)]
    pub validate: ValidateBlock,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub bvp: BvpOptions,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    fn check(&self) -> CliResult<()> {
        let bad = |e: ionflux::Error| CliError::Config(e.to_string());
        self.model.to_model().map_err(bad)?;
        self.solver.validate().map_err(bad)?;
        self.bvp.validate().map_err(bad)?;
        if let Some(s) = &self.sweep {
            s.grid()?;
        }
        let v = &self.validate;
        if v.epsilons.is_empty() || v.epsilons.iter().any(|e| !(*e > 0.0)) {
            return Err(CliError::Config("validate.epsilons must be non-empty and positive".into()));
        }
        if v.d.is_empty() || v.d.iter().any(|d| !(*d >= 0.0)) {
            return Err(CliError::Config("validate.d must be non-empty and non-negative".into()));
        }
        if !(v.rel_tol > 0.0) {
            return Err(CliError::Config("validate.rel_tol must be positive".into()));
        }
        if self.output.formats.is_empty() {
            return Err(CliError::Config("output.formats must not be empty".into()));
        }
        Ok(())
    }

    /// Model with validated data; `check` has already run.
    pub fn model(&self) -> ModelSpec {
        self.model.to_model().expect("model validated at load")
    }

    /// Confirms the config may be run as `command`.
    pub fn require_command(&self, command: Command) -> CliResult<()> {
        match self.command {
            Some(c) if c != command => Err(CliError::Config(format!(
                "config is for `{}` but `{}` was requested",
                c.name(),
                command.name()
            ))),
            _ => Ok(()),
        }
    }

    /// The sweep grid over `V`, or the default `[-2, 2]` in 41 points.
    pub fn voltage_grid(&self) -> CliResult<Vec<f64>> {
        match &self.sweep {
            Some(s) if s.parameter != SweepParameter::V => {
                Err(CliError::Config(format!("this command sweeps V, not {}", s.parameter.name())))
            }
            Some(s) => s.grid(),
            None => Ok(linspace(-2.0, 2.0, 41)),
        }
    }
}
