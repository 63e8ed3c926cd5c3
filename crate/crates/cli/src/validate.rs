//! Invariant suite run by `kerrcav validate`.

use std::f64::consts::PI;

use kerrcav::{
    oracle_amplitudes, BranchFields, ClosedForm, CoherentWeights, Deformation, FockTruncation, ModelParams, Scheme,
    StepControl, SweepSpec, SweepVariable, T4Convention, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::CliError;

const NORM_TOL: f64 = 1e-9;
const VIETA_TOL: f64 = 1e-9;
const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const ORACLE_TOL: f64 = 1e-6;

/// Time horizon of the random draws.
const DRAW_HORIZON: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Reported but never counted as a failure.
    pub informational: bool,
}

impl Check {
    fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, passed: value <= tolerance, informational: false }
    }

    fn info(name: &str, value: f64) -> Self {
        Check { name: name.into(), value, tolerance: f64::NAN, passed: true, informational: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseReport {
    pub label: String,
    pub params: ModelParams,
    pub n_max: usize,
    pub times: Vec<f64>,
    pub checks: Vec<Check>,
    pub error: Option<String>,
}

impl CaseReport {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed || c.informational)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub draws: usize,
    pub passed: bool,
    pub cases: Vec<CaseReport>,
}

impl ValidationReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for case in &self.cases {
            if let Some(e) = &case.error {
                out.push(format!("{}: {e}", case.label));
            }
            for c in case.checks.iter().filter(|c| !c.passed && !c.informational) {
                out.push(format!("{}: {} = {:.3e} > {:.1e}", case.label, c.name, c.value, c.tolerance));
            }
        }
        out
    }
}

/// Times checked for the configured point: five samples up to the sweep's
/// final time (or the evaluation time of a coupling sweep).
fn configured_times(spec: &SweepSpec) -> Vec<f64> {
    let end = match spec.variable {
        SweepVariable::Time => spec.max,
        SweepVariable::Lambda => spec.at_time,
    };
    if end == 0.0 {
        vec![0.0]
    } else {
        (0..=4).map(|k| end * k as f64 / 4.0).collect()
    }
}

/// Runs the suite on the configured parameters and on `draws` seeded random
/// sets. A closed form that cannot be built for the configured parameters is
/// an error (e.g. `lambda = 0`); failures on random draws are recorded.
pub fn validate(spec: &SweepSpec, seed: u64, draws: usize) -> Result<ValidationReport, CliError> {
    spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let trunc = spec.truncation().map_err(CliError::Numerical)?;
    ClosedForm::new(&spec.params, &trunc).map_err(CliError::Numerical)?;

    let mut cases = vec![check_case("configured", &spec.params, &trunc, &configured_times(spec), &spec.integrator)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times: Vec<f64> = (0..=4).map(|k| DRAW_HORIZON * k as f64 / 4.0).collect();
    for i in 0..draws {
        let params = random_params(&mut rng);
        let label = format!("draw {i}");
        let case = match kerrcav::choose_truncation(params.alpha1, params.alpha2, spec.tail_eps) {
            Ok(trunc) => check_case(&label, &params, &trunc, &times, &spec.integrator),
            Err(e) => {
                CaseReport { label, params, n_max: 0, times: times.clone(), checks: vec![], error: Some(e.to_string()) }
            }
        };
        cases.push(case);
    }
    let passed = cases.iter().all(CaseReport::passed);
    Ok(ValidationReport { seed, draws, passed, cases })
}

/// `|alpha| <= 2`, every rate within `[-30, 30]`, normalized weights with
/// `gamma2 = gamma3`.
pub fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
    let mut c = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let (g1, g2, g4) = (c(), c(), c());
    let norm = (g1.norm_sqr() + 2.0 * g2.norm_sqr() + g4.norm_sqr()).sqrt();
    let mut alpha = || C64::from_polar(2.0 * rng.gen::<f64>().sqrt(), rng.gen_range(-PI..PI));
    let (alpha1, alpha2) = (alpha(), alpha());
    ModelParams {
        lambda: rng.gen_range(0.05..3.0),
        epsilon: rng.gen_range(-30.0..30.0),
        phi: rng.gen_range(-PI..PI),
        delta: rng.gen_range(-30.0..30.0),
        beta1: rng.gen_range(-2.0..2.0),
        beta2: rng.gen_range(-2.0..2.0),
        chi1: rng.gen_range(-1.0..1.0),
        chi2: rng.gen_range(-1.0..1.0),
        chi12: rng.gen_range(-1.0..1.0),
        alpha1,
        alpha2,
        gamma: [g1 / norm, g2 / norm, g2 / norm, g4 / norm],
        deformation: if rng.gen_bool(0.5) { Deformation::Linear } else { Deformation::Sqrt },
        t4_convention: T4Convention::Corrected,
    }
}

fn check_case(
    label: &str,
    params: &ModelParams,
    trunc: &FockTruncation,
    times: &[f64],
    ctl: &StepControl,
) -> CaseReport {
    let mut report = CaseReport {
        label: label.into(),
        params: params.clone(),
        n_max: trunc.n_max,
        times: times.to_vec(),
        checks: Vec::new(),
        error: None,
    };
    let cf = match ClosedForm::new(params, trunc) {
        Ok(cf) => cf,
        Err(e) => {
            report.error = Some(e.to_string());
            return report;
        }
    };
    let w = CoherentWeights::new(params, trunc);
    let vieta = cf.cells.iter().flat_map(|c| c.cubic.vieta_residuals()).fold(0.0, f64::max);
    report.checks.push(Check::below("vieta_residual", vieta, VIETA_TOL));

    let (mut norm, mut herm, mut trace, mut neg, mut pnd, mut moments) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let sets: Vec<_> = times.iter().map(|&t| cf.at(t)).collect();
    for set in &sets {
        norm = norm.max((set.norm(&w) - 1.0).abs());
        let fields = BranchFields::from_ansatz(set, &w);
        let rho = fields.atom_density();
        herm = herm.max(rho.hermiticity_error());
        trace = trace.max((rho.trace() - 1.0).abs());
        neg = neg.max(-rho.min_eigenvalue());
        pnd = pnd.max((fields.joint_pnd().total() - 1.0).abs());
        moments = moments.max(moment_asymmetry(&fields));
    }
    report.checks.push(Check::below("norm_drift", norm, NORM_TOL));
    report.checks.push(Check::below("density_hermiticity", herm, HERMITIAN_TOL));
    report.checks.push(Check::below("density_trace", trace, NORM_TOL));
    report.checks.push(Check::below("density_negativity", neg, PSD_TOL));
    report.checks.push(Check::below("pnd_normalization", pnd, NORM_TOL));
    report.checks.push(Check::below("moment_hermiticity", moments, HERMITIAN_TOL));

    match oracle_amplitudes(params, trunc, times, ctl, Scheme::PostRwa) {
        Ok(oracle) => {
            let delta = sets.iter().zip(&oracle).map(|(a, b)| a.max_deviation(b)).fold(0.0, f64::max);
            report.checks.push(Check::below("closed_vs_oracle", delta, ORACLE_TOL));
        }
        Err(e) => report.error = Some(format!("oracle: {e}")),
    }

    if params.chi2 != 0.0 {
        let other = match params.t4_convention {
            T4Convention::Corrected => T4Convention::MixedIndex,
            T4Convention::MixedIndex => T4Convention::Corrected,
        };
        let alt = ModelParams { t4_convention: other, ..params.clone() };
        if let Ok(alt_cf) = ClosedForm::new(&alt, trunc) {
            let gap = times.iter().map(|&t| cf.at(t).max_deviation(&alt_cf.at(t))).fold(0.0, f64::max);
            report.checks.push(Check::info("t4_convention_divergence", gap));
        }
    }
    report
}

/// Largest `|<X> - conj(<X^dag>)|` over exponents up to two, relative to the
/// moment's size.
fn moment_asymmetry(fields: &BranchFields) -> f64 {
    let mut worst = 0.0f64;
    for e in 0..81 {
        let (p1, q1, p2, q2) = (e % 3, (e / 3) % 3, (e / 9) % 3, e / 27);
        let (Ok(m), Ok(d)) = (fields.moment(p1, q1, p2, q2), fields.moment(q1, p1, q2, p2)) else { continue };
        worst = worst.max((m - d.conj()).norm() / (1.0 + m.norm()));
    }
    worst
}
