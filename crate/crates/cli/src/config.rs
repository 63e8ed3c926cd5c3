//! Run configuration files.
//!
//! ```toml
//! format = "csv"            # csv | json | svg
//! out = "q.csv"             # optional; stdout when absent
//! seed = 42                 # drives the random draws of `validate`
//! engine = "closed_form"    # closed_form | oracle_rwa | oracle_full | both
//!
//! [model]
//! lambda = 1.0
//! epsilon = 10.0
//! delta = 10.0
//! # ... every ModelParams field; complex numbers are [re, im]
//! gamma = [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]
//!
//! [truncation]              # optional
//! tail_eps = 1e-12
//!
//! [sweep]                   # exactly one of [sweep] and [point]
//! variable = "time"
//! min = 0.0
//! max = 10.0
//! points = 201
//! observables = ["mandel_q(mode1)", "g2(mode1)"]
//! ```

use std::path::{Path, PathBuf};

use kerrcav::sweep::DEFAULT_TAIL_EPS;
use kerrcav::{Engine, ModelParams, Observable, StepControl, SweepSpec, SweepVariable};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable that replaces the configured output path.
pub const OUT_ENV: &str = "KERRCAV_OUT";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    #[serde(default = "default_tail_eps")]
    pub tail_eps: f64,
    #[serde(default)]
    pub n_max: Option<usize>,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig { tail_eps: DEFAULT_TAIL_EPS, n_max: None }
    }
}

fn default_tail_eps() -> f64 {
    DEFAULT_TAIL_EPS
}

fn default_at_time() -> f64 {
    1.0
}

fn default_seed() -> u64 {
    42
}

fn default_draws() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub variable: SweepVariable,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default = "default_at_time")]
    pub at_time: f64,
    pub observables: Vec<Observable>,
}

/// A single evaluation time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointBlock {
    pub t: f64,
    pub observables: Vec<Observable>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateBlock {
    /// Random parameter draws on top of the configured point.
    #[serde(default = "default_draws")]
    pub draws: usize,
}

impl Default for ValidateBlock {
    fn default() -> Self {
        ValidateBlock { draws: default_draws() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelParams,
    #[serde(default)]
    pub truncation: TruncationConfig,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub point: Option<PointBlock>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default)]
    pub integrator: StepControl,
    #[serde(default)]
    pub validate: ValidateBlock,
    /// Free-form notes carried into the output metadata.
    #[serde(default)]
    pub notes: Vec<String>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// A config that reproduces a sweep spec, e.g. a figure preset.
    pub fn from_spec(spec: &SweepSpec) -> Self {
        RunConfig {
            model: spec.params.clone(),
            truncation: TruncationConfig { tail_eps: spec.tail_eps, n_max: spec.n_max },
            sweep: Some(SweepBlock {
                variable: spec.variable,
                min: spec.min,
                max: spec.max,
                points: spec.points,
                at_time: spec.at_time,
                observables: spec.observables.clone(),
            }),
            point: None,
            format: OutputFormat::default(),
            out: None,
            seed: default_seed(),
            engine: spec.engine,
            integrator: spec.integrator,
            validate: ValidateBlock::default(),
            notes: spec.notes.clone(),
        }
    }

    /// Semantic checks, each naming the offending key.
    pub fn check(&self) -> Result<(), CliError> {
        let at = |key: &str, e: kerrcav::Error| CliError::Config(format!("{key}: {e}"));
        match (&self.sweep, &self.point) {
            (Some(_), Some(_)) => return Err(CliError::Config("give either [sweep] or [point], not both".into())),
            (None, None) => return Err(CliError::Config("missing [sweep] or [point] table".into())),
            _ => {}
        }
        self.model.validate().map_err(|e| at("model", e))?;
        self.integrator.validate().map_err(|e| at("integrator", e))?;
        if !(self.truncation.tail_eps > 0.0 && self.truncation.tail_eps < 1.0) {
            return Err(CliError::Config(format!(
                "truncation.tail_eps: {} must lie in (0, 1)",
                self.truncation.tail_eps
            )));
        }
        if let Some(p) = &self.point {
            if !(p.t.is_finite() && p.t >= 0.0) {
                return Err(CliError::Config(format!("point.t: {} must be finite and nonnegative", p.t)));
            }
        }
        self.spec().validate().map_err(|e| at(if self.sweep.is_some() { "sweep" } else { "point" }, e))
    }

    pub fn spec(&self) -> SweepSpec {
        let (variable, min, max, points, at_time, observables) = match (&self.sweep, &self.point) {
            (Some(s), _) => (s.variable, s.min, s.max, s.points, s.at_time, s.observables.clone()),
            (None, Some(p)) => (SweepVariable::Time, p.t, p.t, 1, p.t, p.observables.clone()),
            (None, None) => unreachable!("checked on load"),
        };
        SweepSpec {
            variable,
            min,
            max,
            points,
            at_time,
            params: self.model.clone(),
            tail_eps: self.truncation.tail_eps,
            n_max: self.truncation.n_max,
            observables,
            engine: self.engine,
            integrator: self.integrator,
            notes: self.notes.clone(),
        }
    }
}
