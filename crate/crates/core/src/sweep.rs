//! Observable sweeps over coupling strength or time, and the parameter sets
//! of the figure presets.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{choose_truncation, CoherentWeights, Deformation, FockTruncation, ModelParams};
use crate::observables::{BranchFields, Mode, Observable, SqueezeTarget};
use crate::oracle::{integrate_full, oracle_amplitudes, Scheme, StepControl, TruncatedState};
use crate::solver::{AmplitudeSet, ClosedForm};

/// Smallest coupling the closed form accepts in a sweep.
pub const MIN_CLOSED_FORM_LAMBDA: f64 = 1e-10;

pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Lambda,
    Time,
}

impl SweepVariable {
    pub fn column(self) -> &'static str {
        match self {
            SweepVariable::Lambda => "lambda",
            SweepVariable::Time => "t",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    ClosedForm,
    OracleRwa,
    OracleFull,
    /// Closed form with post-RWA oracle columns and their deltas.
    Both,
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed" | "closed_form" => Ok(Engine::ClosedForm),
            "rwa" | "oracle_rwa" => Ok(Engine::OracleRwa),
            "full" | "oracle_full" => Ok(Engine::OracleFull),
            "both" => Ok(Engine::Both),
            _ => Err(Error::InvalidParams(format!("unknown engine '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    /// Evaluation time of coupling sweeps; ignored by time sweeps.
    #[serde(default = "default_at_time")]
    pub at_time: f64,
    pub params: ModelParams,
    #[serde(default = "default_tail_eps")]
    pub tail_eps: f64,
    /// Overrides the cutoff otherwise chosen from `tail_eps`.
    #[serde(default)]
    pub n_max: Option<usize>,
    pub observables: Vec<Observable>,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default)]
    pub integrator: StepControl,
    /// How ambiguous inputs were resolved, carried into the output metadata.
    #[serde(default)]
    pub notes: Vec<String>,
}

fn default_at_time() -> f64 {
    1.0
}

fn default_tail_eps() -> f64 {
    DEFAULT_TAIL_EPS
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSweep(m));
        if !(self.min.is_finite() && self.max.is_finite()) || self.min > self.max {
            return bad(format!("range [{}, {}] is not an ordered finite interval", self.min, self.max));
        }
        // A single point is only meaningful on a degenerate range.
        if self.points < 2 && !(self.points == 1 && self.min == self.max) {
            return bad(format!("points = {} must be at least 2 (or 1 with min == max)", self.points));
        }
        if self.observables.is_empty() {
            return bad("no observables requested".into());
        }
        match self.variable {
            SweepVariable::Time if self.min < 0.0 => return bad("time range must be nonnegative".into()),
            SweepVariable::Lambda => {
                if self.min < 0.0 {
                    return bad("coupling range must be nonnegative".into());
                }
                if matches!(self.engine, Engine::ClosedForm | Engine::Both) && self.min < MIN_CLOSED_FORM_LAMBDA {
                    return bad(format!(
                        "closed form needs lambda >= {MIN_CLOSED_FORM_LAMBDA:e}; use engine = oracle_rwa for smaller couplings"
                    ));
                }
                if !(self.at_time.is_finite() && self.at_time >= 0.0) {
                    return bad(format!("at_time = {} must be finite and nonnegative", self.at_time));
                }
            }
            _ => {}
        }
        self.params.validate()?;
        self.integrator.validate()?;
        Ok(())
    }

    pub fn truncation(&self) -> Result<FockTruncation> {
        match self.n_max {
            Some(n_max) => Ok(FockTruncation { n_max: n_max.max(crate::model::MIN_N_MAX), tail_eps: self.tail_eps }),
            None => choose_truncation(self.params.alpha1, self.params.alpha2, self.tail_eps),
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|k| if k + 1 == n { self.max } else { self.min + (self.max - self.min) * k as f64 / (n - 1) as f64 })
            .collect()
    }
}

/// One row of a sweep table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservableRecord {
    pub x: f64,
    pub values: Vec<Option<f64>>,
    /// Post-RWA oracle values, present for [`Engine::Both`].
    pub oracle: Option<Vec<Option<f64>>>,
    /// `|closed - oracle|` per observable.
    pub deltas: Option<Vec<Option<f64>>>,
    /// Largest per-cell amplitude deviation between closed form and oracle.
    pub amplitude_delta: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepTable {
    pub variable: SweepVariable,
    pub engine: Engine,
    pub n_max: usize,
    pub observables: Vec<Observable>,
    pub rows: Vec<ObservableRecord>,
    pub notes: Vec<String>,
}

impl SweepTable {
    /// Largest closed-versus-oracle amplitude deviation over all rows.
    pub fn max_amplitude_delta(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.amplitude_delta).reduce(f64::max)
    }

    pub fn max_observable_delta(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.deltas.as_ref()).flatten().flatten().copied().reduce(f64::max)
    }

    /// Values of one observable column, `None` where the row failed.
    pub fn column(&self, obs: Observable) -> Vec<Option<f64>> {
        let Some(k) = self.observables.iter().position(|o| *o == obs) else {
            return vec![None; self.rows.len()];
        };
        self.rows.iter().map(|r| r.values[k]).collect()
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Observable values at one point, plus whatever went wrong.
fn evaluate(observables: &[Observable], fields: &BranchFields) -> (Vec<Option<f64>>, Vec<String>) {
    let mut errs = Vec::new();
    let values = observables
        .iter()
        .map(|o| match o.evaluate(fields) {
            Ok(v) if v.is_finite() => Some(v),
            Ok(v) => {
                errs.push(format!("{o}: non-finite value {v}"));
                None
            }
            Err(e) => {
                errs.push(format!("{o}: {e}"));
                None
            }
        })
        .collect();
    (values, errs)
}

struct PointResult {
    primary: Result<AmplitudeOrState>,
    oracle: Option<Result<AmplitudeSet>>,
}

enum AmplitudeOrState {
    Amplitudes(AmplitudeSet),
    State(TruncatedState),
}

impl AmplitudeOrState {
    fn fields(&self, weights: &CoherentWeights) -> BranchFields {
        match self {
            AmplitudeOrState::Amplitudes(a) => BranchFields::from_ansatz(a, weights),
            AmplitudeOrState::State(s) => s.fields(),
        }
    }
}

fn single_engine(
    engine: Engine,
    params: &ModelParams,
    trunc: &FockTruncation,
    times: &[f64],
    ctl: &StepControl,
) -> Result<Vec<AmplitudeOrState>> {
    match engine {
        Engine::ClosedForm | Engine::Both => {
            let cf = ClosedForm::new(params, trunc)?;
            Ok(times.iter().map(|&t| AmplitudeOrState::Amplitudes(cf.at(t))).collect())
        }
        Engine::OracleRwa => Ok(oracle_amplitudes(params, trunc, times, ctl, Scheme::PostRwa)?
            .into_iter()
            .map(AmplitudeOrState::Amplitudes)
            .collect()),
        Engine::OracleFull => {
            let init = TruncatedState::product_initial(params, trunc);
            Ok(integrate_full(params, trunc, &init, times, ctl)?.into_iter().map(AmplitudeOrState::State).collect())
        }
    }
}

/// Runs the engine(s) at the given times for one parameter set.
fn run_times(spec: &SweepSpec, params: &ModelParams, trunc: &FockTruncation, times: &[f64]) -> Vec<PointResult> {
    let primary = single_engine(spec.engine, params, trunc, times, &spec.integrator);
    let oracle = (spec.engine == Engine::Both)
        .then(|| oracle_amplitudes(params, trunc, times, &spec.integrator, Scheme::PostRwa));
    let n = times.len();
    let primary: Vec<Result<AmplitudeOrState>> = match primary {
        Ok(v) => v.into_iter().map(Ok).collect(),
        Err(e) => (0..n).map(|_| Err(e.clone())).collect(),
    };
    let oracle: Vec<Option<Result<AmplitudeSet>>> = match oracle {
        None => vec![None; n],
        Some(Ok(v)) => v.into_iter().map(|a| Some(Ok(a))).collect(),
        Some(Err(e)) => vec![Some(Err(e)); n],
    };
    primary.into_iter().zip(oracle).map(|(primary, oracle)| PointResult { primary, oracle }).collect()
}

fn assemble_row(
    x: f64,
    spec: &SweepSpec,
    weights: &CoherentWeights,
    point: PointResult,
) -> (ObservableRecord, Option<Error>) {
    let obs = &spec.observables;
    let mut errors = Vec::new();
    let mut first_err = None;

    let primary = match point.primary {
        Ok(p) => {
            let (v, e) = evaluate(obs, &p.fields(weights));
            errors.extend(e);
            Some((p, v))
        }
        Err(e) => {
            errors.push(format!("{}: {e}", engine_label(spec.engine)));
            first_err = Some(e);
            None
        }
    };
    let oracle = point.oracle.map(|o| match o {
        Ok(a) => {
            let (v, e) = evaluate(obs, &BranchFields::from_ansatz(&a, weights));
            errors.extend(e.into_iter().map(|m| format!("oracle {m}")));
            Some((a, v))
        }
        Err(e) => {
            errors.push(format!("oracle: {e}"));
            if first_err.is_none() && primary.is_none() {
                first_err = Some(e);
            }
            None
        }
    });

    let values = match (&primary, &oracle) {
        (Some((_, v)), _) => v.clone(),
        (None, Some(Some((_, v)))) => v.clone(),
        _ => vec![None; obs.len()],
    };
    let mut record = ObservableRecord { x, values, oracle: None, deltas: None, amplitude_delta: None, error: None };
    if let Some(oracle) = oracle {
        let oracle_values = oracle.as_ref().map(|(_, v)| v.clone()).unwrap_or_else(|| vec![None; obs.len()]);
        if let (Some((AmplitudeOrState::Amplitudes(closed), cv)), Some((orc, _))) = (&primary, &oracle) {
            record.amplitude_delta = Some(closed.max_deviation(orc));
            record.deltas = Some(
                cv.iter()
                    .zip(&oracle_values)
                    .map(|(a, b)| match (a, b) {
                        (Some(a), Some(b)) => Some((a - b).abs()),
                        _ => None,
                    })
                    .collect(),
            );
        } else {
            record.deltas = Some(vec![None; obs.len()]);
        }
        record.oracle = Some(oracle_values);
    }
    if !errors.is_empty() {
        record.error = Some(errors.join("; "));
    }
    let fatal = primary.is_none() && record.values.iter().all(Option::is_none);
    (record, if fatal { first_err } else { None })
}

fn engine_label(e: Engine) -> &'static str {
    match e {
        Engine::ClosedForm | Engine::Both => "closed form",
        Engine::OracleRwa => "post-RWA oracle",
        Engine::OracleFull => "full oracle",
    }
}

/// Evaluates every requested observable at every grid point. Per-point
/// failures are recorded in the row; the sweep fails only if no point
/// produced values, returning the first point's error.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let trunc = spec.truncation()?;
    spec.params.check_truncation(&trunc)?;
    let weights = CoherentWeights::new(&spec.params, &trunc);
    let xs = spec.grid();

    let rows: Vec<(ObservableRecord, Option<Error>)> = match spec.variable {
        SweepVariable::Time => run_times(spec, &spec.params, &trunc, &xs)
            .into_iter()
            .zip(&xs)
            .map(|(point, &x)| assemble_row(x, spec, &weights, point))
            .collect(),
        SweepVariable::Lambda => xs
            .par_iter()
            .map(|&lambda| {
                let params = ModelParams { lambda, ..spec.params.clone() };
                let point = run_times(spec, &params, &trunc, &[spec.at_time]).pop().expect("one point");
                assemble_row(lambda, spec, &weights, point)
            })
            .collect(),
    };

    if let Some(err) = rows.iter().map(|(_, e)| e.clone()).collect::<Option<Vec<Error>>>() {
        return Err(err.into_iter().next().expect("nonempty grid"));
    }
    Ok(SweepTable {
        variable: spec.variable,
        engine: spec.engine,
        n_max: trunc.n_max,
        observables: spec.observables.clone(),
        rows: rows.into_iter().map(|(r, _)| r).collect(),
        notes: spec.notes.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Figure {
    /// Photon number distribution of the tracked cell.
    Fig2,
    /// Mandel `Q`.
    Fig3,
    /// `g2(0)`.
    Fig4,
    /// Quadrature squeezing.
    Fig5,
    /// Linear entropy.
    Fig6,
}

/// `a`, `c` sweep the coupling at `t = 1`; `b`, `d` sweep time at
/// `lambda = 1`; `c`, `d` use `f(n) = sqrt(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Panel {
    A,
    B,
    C,
    D,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PresetId {
    pub figure: Figure,
    pub panel: Panel,
}

impl PresetId {
    pub fn all() -> Vec<PresetId> {
        let figs = [Figure::Fig2, Figure::Fig3, Figure::Fig4, Figure::Fig5, Figure::Fig6];
        let panels = [Panel::A, Panel::B, Panel::C, Panel::D];
        figs.iter().flat_map(|&figure| panels.iter().map(move |&panel| PresetId { figure, panel })).collect()
    }
}

impl fmt::Display for PresetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fig = match self.figure {
            Figure::Fig2 => 2,
            Figure::Fig3 => 3,
            Figure::Fig4 => 4,
            Figure::Fig5 => 5,
            Figure::Fig6 => 6,
        };
        let panel = match self.panel {
            Panel::A => 'a',
            Panel::B => 'b',
            Panel::C => 'c',
            Panel::D => 'd',
        };
        write!(f, "fig{fig}{panel}")
    }
}

impl FromStr for PresetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParams(format!("unknown preset '{s}' (expected fig2a .. fig6d)"));
        let rest = s.strip_prefix("fig").ok_or_else(bad)?;
        let mut chars = rest.chars();
        let figure = match chars.next() {
            Some('2') => Figure::Fig2,
            Some('3') => Figure::Fig3,
            Some('4') => Figure::Fig4,
            Some('5') => Figure::Fig5,
            Some('6') => Figure::Fig6,
            _ => return Err(bad()),
        };
        let panel = match chars.next() {
            Some('a') => Panel::A,
            Some('b') => Panel::B,
            Some('c') => Panel::C,
            Some('d') => Panel::D,
            _ => return Err(bad()),
        };
        if chars.next().is_some() {
            return Err(bad());
        }
        Ok(PresetId { figure, panel })
    }
}

pub const PRESET_LAMBDA_RANGE: (f64, f64) = (0.1, 5.0);
pub const PRESET_LAMBDA_POINTS: usize = 50;
pub const PRESET_TIME_RANGE: (f64, f64) = (0.0, 10.0);
pub const PRESET_TIME_POINTS: usize = 201;

/// Parameter set and sweep of one figure panel.
pub fn figure_preset(id: PresetId) -> SweepSpec {
    let w = 1.0 / 3f64.sqrt();
    let real = |x: f64| C64::new(x, 0.0);
    let kerr = match id.figure {
        Figure::Fig2 | Figure::Fig3 | Figure::Fig4 => 1.0,
        Figure::Fig5 | Figure::Fig6 => 0.0,
    };
    let delta = if id.figure == Figure::Fig2 { 30.0 } else { 10.0 };
    let deformation = match id.panel {
        Panel::A | Panel::B => Deformation::Linear,
        Panel::C | Panel::D => Deformation::Sqrt,
    };
    let params = ModelParams {
        lambda: 1.0,
        epsilon: delta,
        phi: 0.0,
        delta,
        beta1: 0.0,
        beta2: 0.0,
        chi1: kerr,
        chi2: kerr,
        chi12: 0.0,
        alpha1: real(1.0),
        alpha2: real(1.0),
        gamma: [real(w), real(w), real(w), real(0.0)],
        deformation,
        t4_convention: Default::default(),
    };
    let observables = match id.figure {
        Figure::Fig2 => vec![Observable::Pnd { n1: 10, n2: 10 }],
        Figure::Fig3 => vec![Observable::MandelQ(Mode::Mode1)],
        Figure::Fig4 => vec![Observable::G2(Mode::Mode1)],
        Figure::Fig5 => vec![Observable::SqueezeX(SqueezeTarget::Mode1), Observable::SqueezeP(SqueezeTarget::Mode1)],
        Figure::Fig6 => vec![Observable::LinearEntropy],
    };
    let (variable, (min, max), points) = match id.panel {
        Panel::A | Panel::C => (SweepVariable::Lambda, PRESET_LAMBDA_RANGE, PRESET_LAMBDA_POINTS),
        Panel::B | Panel::D => (SweepVariable::Time, PRESET_TIME_RANGE, PRESET_TIME_POINTS),
    };
    let mut notes = vec![
        format!("preset {id}"),
        "unsubscripted chi read as the cross-Kerr constant chi12".into(),
        "atomic weights gamma1:gamma2:gamma4 = 1:1:0 with gamma3 = gamma2 (the ansatz identifies A3 with A2), normalized to 1/sqrt(3)".into(),
        "epsilon = Delta (not stated for the figures; the dropped terms are only fast near this drive frequency)".into(),
        format!("tail_eps = {DEFAULT_TAIL_EPS:e}"),
    ];
    match id.panel {
        Panel::A | Panel::C => notes.push("coupling swept at t = 1".into()),
        Panel::B | Panel::D => notes.push("time swept at lambda = 1".into()),
    }
    if id.figure == Figure::Fig4 {
        notes.push("contradictory Kerr settings resolved to chi12 = 0, chi1 = chi2 = 1".into());
    }
    if matches!(id.figure, Figure::Fig3 | Figure::Fig4 | Figure::Fig5) {
        notes.push("single-mode observables evaluated on mode 1".into());
    }
    SweepSpec {
        variable,
        min,
        max,
        points,
        at_time: 1.0,
        params,
        tail_eps: DEFAULT_TAIL_EPS,
        n_max: None,
        observables,
        engine: Engine::ClosedForm,
        integrator: StepControl::default(),
        notes,
    }
}
