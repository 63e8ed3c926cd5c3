//! Command-line front end: loads a configuration or figure preset, runs the
//! sweep or the invariant suite, and writes CSV, JSON or SVG.
//!
//! Exit status: 0 on success, 1 on I/O errors, 2 for an invalid
//! configuration, 3 for numerical failures and violated invariants.

// `!(x < tol)` is deliberate throughout: NaN must fail every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod validate;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use kerrcav::{figure_preset, run_sweep, Engine, PresetId, SweepTable};

pub use config::{OutputFormat, PointBlock, RunConfig, SweepBlock, OUT_ENV};
pub use validate::{validate, ValidationReport};

/// Largest closed-form vs oracle amplitude delta accepted by `run --validate`.
pub const VALIDATE_DELTA_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(kerrcav::Error),
    #[error("check failed: {0}")]
    Failed(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Failed(_) => 3,
        }
    }
}

impl From<kerrcav::Error> for CliError {
    fn from(e: kerrcav::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e)
        } else {
            CliError::Config(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "kerrcav", version, about = "Two atoms in a two-mode Kerr cavity: closed-form sweeps and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate observables over a sweep or at a single point.
    Run(CommonArgs),
    /// Run the invariant suite on the configured point and seeded random draws.
    Validate(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Figure preset such as fig3b.
    #[arg(long)]
    pub preset: Option<PresetId>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Output file; stdout when absent. Overrides the configured path and
    /// the KERRCAV_OUT environment variable.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also integrate the post-RWA oracle and fail unless it agrees.
    #[arg(long)]
    pub validate: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// closed | rwa | full | both
    #[arg(long)]
    pub engine: Option<Engine>,
}

/// Configuration plus a label for the summary line.
#[derive(Clone, Debug)]
pub struct Job {
    pub label: String,
    pub config: RunConfig,
}

/// Default for `validate` without a configuration: the excited pair in a
/// coherent field, checked up to `t = 1`.
pub fn default_config() -> RunConfig {
    RunConfig::from_toml(
        r#"
        [model]
        lambda = 1.0
        epsilon = 0.0
        phi = 0.0
        delta = 0.0
        beta1 = 0.0
        beta2 = 0.0
        chi1 = 0.0
        chi2 = 0.0
        chi12 = 0.0
        alpha1 = [1.0, 0.0]
        alpha2 = [1.0, 0.0]
        gamma = [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]

        [point]
        t = 1.0
        observables = ["norm"]
        "#,
    )
    .expect("built-in default parses")
}

/// Merges the configuration source with command-line overrides. Output path
/// precedence: `--out`, then `KERRCAV_OUT`, then the file's `out`.
pub fn resolve(args: &CommonArgs, allow_default: bool) -> Result<Job, CliError> {
    let (label, mut config) = match (&args.config, &args.preset) {
        (Some(path), None) => (path.display().to_string(), RunConfig::load(path)?),
        (None, Some(id)) => (id.to_string(), RunConfig::from_spec(&figure_preset(*id))),
        (None, None) if allow_default => ("default".to_string(), default_config()),
        (None, None) => return Err(CliError::Config("pass --config <path> or --preset <id>".into())),
        (Some(_), Some(_)) => return Err(CliError::Config("--config and --preset are exclusive".into())),
    };
    if let Some(f) = args.format {
        config.format = f;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(e) = args.engine {
        config.engine = e;
    }
    if args.validate {
        config.engine = Engine::Both;
    }
    if let Some(out) = &args.out {
        config.out = Some(out.clone());
    } else if let Some(env) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        config.out = Some(PathBuf::from(env));
    }
    config.check()?;
    Ok(Job { label, config })
}

pub fn render(table: &SweepTable, format: OutputFormat, label: &str) -> Result<String, CliError> {
    match format {
        OutputFormat::Csv => output::to_csv(table),
        OutputFormat::Json => output::to_json(table),
        OutputFormat::Svg => Ok(output::to_svg(table, label)),
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<String, CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            Ok(path.display().to_string())
        }
        None => {
            std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
            Ok("stdout".into())
        }
    }
}

/// Runs the sweep and writes the table. Returns the summary line.
pub fn run_job(job: &Job, check_oracle: bool) -> Result<String, CliError> {
    let spec = job.config.spec();
    let table = run_sweep(&spec)?;
    let text = render(&table, job.config.format, &job.label)?;
    let destination = emit(&text, &job.config.out)?;
    let summary = output::summary(&job.label, &table, &destination);
    if let Some(row) = table.rows.iter().find(|r| r.error.is_some()) {
        return Err(CliError::Failed(format!(
            "{summary}; {} = {}: {}",
            table.variable.column(),
            output::fmt_sig(row.x),
            row.error.as_deref().unwrap_or_default()
        )));
    }
    if check_oracle {
        let delta = table.max_amplitude_delta().unwrap_or(f64::INFINITY);
        if !(delta < VALIDATE_DELTA_TOL) {
            return Err(CliError::Failed(format!(
                "{summary}; closed-form vs oracle delta {delta:.3e} exceeds {VALIDATE_DELTA_TOL:e}"
            )));
        }
    }
    Ok(summary)
}

/// Runs the invariant suite and writes its JSON report. Returns the summary.
pub fn validate_job(job: &Job) -> Result<String, CliError> {
    let spec = job.config.spec();
    let report = validate(&spec, job.config.seed, job.config.validate.draws)?;
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    let destination = emit(&text, &job.config.out)?;
    let checks: usize = report.cases.iter().map(|c| c.checks.len()).sum();
    let failures = report.failures();
    if failures.is_empty() {
        Ok(format!("{}: {} cases, {checks} checks passed -> {destination}", job.label, report.cases.len()))
    } else {
        Err(CliError::Failed(format!("{} failed check(s): {}", failures.len(), failures.join("; "))))
    }
}

/// Entry point shared by the binary and tests; returns the exit status.
pub fn main_with(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Run(args) => resolve(args, false).and_then(|job| {
            let to_stdout = job.config.out.is_none();
            run_job(&job, args.validate).map(|s| (s, to_stdout))
        }),
        Command::Validate(args) => resolve(args, true).and_then(|job| {
            let to_stdout = job.config.out.is_none();
            validate_job(&job).map(|s| (s, to_stdout))
        }),
    };
    match result {
        Ok((summary, to_stdout)) => {
            // Keep stdout clean when it carries the data.
            if to_stdout {
                eprintln!("{summary}");
            } else {
                println!("{summary}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
