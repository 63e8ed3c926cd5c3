//! Physical parameters of the effective two-atom, two-mode Hamiltonian, the
//! coherent-state weights of the initial field, Fock truncation, and the
//! per-cell scalar coefficients `V1, V2, T1, T2, T4` of the amplitude equations.
//!
//! Only the detuning `delta = omega - Omega1 - Omega2` enters the dynamics, so
//! the individual atomic and field frequencies are not stored.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest `n_max` that [`choose_truncation`] will return.
pub const DEFAULT_TRUNCATION_CAP: usize = 512;

/// Smallest `n_max` ever used; the ansatz references `n + 2`.
pub const MIN_N_MAX: usize = 4;

const GAMMA_TOL: f64 = 1e-12;

/// Intensity-dependent coupling function `f(n)` of the deformed ladder
/// operators `R = a f(N)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deformation {
    /// `f(n) = 1`
    #[default]
    Linear,
    /// `f(n) = sqrt(n)`
    Sqrt,
    /// Tabulated nonnegative values `f(0), f(1), ...`; must cover `n_max + 2`.
    Custom(Vec<f64>),
}

impl Deformation {
    /// Panics if a custom table is shorter than `n + 1`; tables are checked
    /// against the truncation by [`ModelParams::check_truncation`].
    pub fn eval(&self, n: usize) -> f64 {
        match self {
            Deformation::Linear => 1.0,
            Deformation::Sqrt => (n as f64).sqrt(),
            Deformation::Custom(table) => {
                *table.get(n).unwrap_or_else(|| panic!("custom deformation table has no entry for n = {n}"))
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Deformation::Linear => "f(n)=1",
            Deformation::Sqrt => "f(n)=sqrt(n)",
            Deformation::Custom(_) => "f(n)=custom",
        }
    }
}

/// Which `chi2` term enters `T4`.
///
/// `Corrected` uses `chi2 (n2+1)(n2+2)`, matching the diagonal of the
/// Hamiltonian on `|g,g,n1+2,n2+2>`. `MixedIndex` keeps the mixed-index form
/// `chi2 (n1+1)(n2+2)`; configuration files name it `paper_literal` or
/// `mixed_index`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum T4Convention {
    #[default]
    Corrected,
    #[serde(rename = "paper_literal", alias = "mixed_index")]
    MixedIndex,
}

/// Every physical constant of the effective model. Rates are angular
/// frequencies in units where `hbar = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Coupling amplitude in `g(t) = lambda cos(epsilon t + phi)`.
    pub lambda: f64,
    pub epsilon: f64,
    pub phi: f64,
    /// Detuning `omega - Omega1 - Omega2`.
    pub delta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub chi1: f64,
    pub chi2: f64,
    pub chi12: f64,
    pub alpha1: C64,
    pub alpha2: C64,
    /// Initial atomic weights on `|e,e>, |e,g>, |g,e>, |g,g>`.
    pub gamma: [C64; 4],
    #[serde(default)]
    pub deformation: Deformation,
    #[serde(default)]
    pub t4_convention: T4Convention,
}

impl Default for ModelParams {
    fn default() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        ModelParams {
            lambda: 1.0,
            epsilon: 0.0,
            phi: 0.0,
            delta: 0.0,
            beta1: 0.0,
            beta2: 0.0,
            chi1: 0.0,
            chi2: 0.0,
            chi12: 0.0,
            alpha1: one,
            alpha2: one,
            gamma: [one, zero, zero, zero],
            deformation: Deformation::Linear,
            t4_convention: T4Convention::Corrected,
        }
    }
}

impl ModelParams {
    /// Checks normalization, the `gamma2 = gamma3` symmetry the ansatz relies
    /// on, finiteness of every rate, and `lambda >= 0`.
    pub fn validate(&self) -> Result<()> {
        self.validate_physical()?;
        if (self.gamma[1] - self.gamma[2]).norm() > GAMMA_TOL {
            return Err(Error::InvalidParams(format!(
                "gamma2 = {} differs from gamma3 = {}; the amplitude ansatz requires them equal",
                self.gamma[1], self.gamma[2]
            )));
        }
        Ok(())
    }

    /// [`validate`](Self::validate) without the exchange symmetry, for
    /// integrators that evolve arbitrary initial states.
    pub fn validate_physical(&self) -> Result<()> {
        let rates = [
            ("lambda", self.lambda),
            ("epsilon", self.epsilon),
            ("phi", self.phi),
            ("delta", self.delta),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("chi1", self.chi1),
            ("chi2", self.chi2),
            ("chi12", self.chi12),
        ];
        for (name, v) in rates {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
        }
        if self.lambda < 0.0 {
            return Err(Error::InvalidParams(format!("lambda = {} is negative", self.lambda)));
        }
        for (name, a) in [("alpha1", self.alpha1), ("alpha2", self.alpha2)] {
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
        }
        if self.gamma.iter().any(|g| !(g.re.is_finite() && g.im.is_finite())) {
            return Err(Error::InvalidParams("gamma contains a non-finite entry".into()));
        }
        let norm: f64 = self.gamma.iter().map(|g| g.norm_sqr()).sum();
        if (norm - 1.0).abs() > GAMMA_TOL {
            return Err(Error::InvalidParams(format!("atomic weights not normalized: sum |gamma_k|^2 = {norm}")));
        }
        if let Deformation::Custom(table) = &self.deformation {
            if let Some(v) = table.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::InvalidParams(format!(
                    "custom deformation value {v} is not a finite nonnegative number"
                )));
            }
        }
        Ok(())
    }

    /// Custom deformation tables must cover every photon number the
    /// truncated space reaches (`n_max + 2`).
    pub fn check_truncation(&self, trunc: &FockTruncation) -> Result<()> {
        if let Deformation::Custom(table) = &self.deformation {
            if table.len() < trunc.n_max + 3 {
                return Err(Error::InvalidParams(format!(
                    "custom deformation has {} entries, need {} for n_max = {}",
                    table.len(),
                    trunc.n_max + 3,
                    trunc.n_max
                )));
            }
        }
        Ok(())
    }

    /// `g(t) = lambda cos(epsilon t + phi)`.
    pub fn coupling(&self, t: f64) -> f64 {
        self.lambda * (self.epsilon * t + self.phi).cos()
    }
}

/// Fock-space cutoff shared by both modes. Cells run over
/// `0 <= n1, n2 <= n_max`; the field states they touch reach `n_max + 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockTruncation {
    pub n_max: usize,
    pub tail_eps: f64,
}

impl FockTruncation {
    pub fn cells_per_mode(&self) -> usize {
        self.n_max + 1
    }

    /// Number of field levels per mode including the two guard levels.
    pub fn levels(&self) -> usize {
        self.n_max + 3
    }
}

/// `q_n = exp(-|alpha|^2 / 2) alpha^n / sqrt(n!)`, evaluated in log space.
pub fn coherent_weight(alpha: C64, n: usize) -> C64 {
    let r = alpha.norm();
    if r == 0.0 {
        return if n == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
    }
    let ln_mag = -0.5 * r * r + n as f64 * r.ln() - 0.5 * ln_factorial(n);
    C64::from_polar(ln_mag.exp(), n as f64 * alpha.arg())
}

fn ln_factorial(n: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

fn poisson_pmf(mean: f64, n: usize) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (-mean + n as f64 * mean.ln() - ln_factorial(n)).exp()
}

/// Smallest `n_max >= 4` whose Poisson tails `sum_{n > n_max} |q_n|^2` are
/// below `tail_eps` for both modes, using the default cap.
pub fn choose_truncation(alpha1: C64, alpha2: C64, tail_eps: f64) -> Result<FockTruncation> {
    choose_truncation_capped(alpha1, alpha2, tail_eps, DEFAULT_TRUNCATION_CAP)
}

pub fn choose_truncation_capped(alpha1: C64, alpha2: C64, tail_eps: f64, cap: usize) -> Result<FockTruncation> {
    if !(tail_eps > 0.0 && tail_eps < 1.0) {
        return Err(Error::InvalidParams(format!("tail_eps = {tail_eps} must lie in (0, 1)")));
    }
    let needed =
        [alpha1, alpha2].into_iter().map(|a| tail_cutoff(a.norm_sqr(), tail_eps, cap)).max().unwrap_or(MIN_N_MAX);
    if needed > cap {
        return Err(Error::TruncationCap { needed, cap });
    }
    Ok(FockTruncation { n_max: needed.max(MIN_N_MAX), tail_eps })
}

/// Returns `cap + 1` when no cutoff up to `cap` works.
fn tail_cutoff(mean: f64, tail_eps: f64, cap: usize) -> usize {
    // Tails are summed from the top so no 1 - sum cancellation occurs.
    let top = cap + 64 + (mean + 40.0 * mean.sqrt()).ceil() as usize;
    let pmf: Vec<f64> = (0..=top).map(|n| poisson_pmf(mean, n)).collect();
    let mut tail = 0.0;
    let mut tails = vec![0.0; top + 1];
    for n in (0..=top).rev() {
        tails[n] = tail; // sum over m > n
        tail += pmf[n];
    }
    (0..=cap).find(|&n| tails[n] < tail_eps).unwrap_or(cap + 1)
}

/// Coherent weights `q_n` of both modes up to `n_max + 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherentWeights {
    pub mode1: Vec<C64>,
    pub mode2: Vec<C64>,
}

impl CoherentWeights {
    pub fn new(params: &ModelParams, trunc: &FockTruncation) -> Self {
        let levels = trunc.levels();
        CoherentWeights {
            mode1: (0..levels).map(|n| coherent_weight(params.alpha1, n)).collect(),
            mode2: (0..levels).map(|n| coherent_weight(params.alpha2, n)).collect(),
        }
    }

    pub fn levels(&self) -> usize {
        self.mode1.len()
    }
}

/// Scalar coefficients of the three coupled amplitude equations for one cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchCoefficients {
    pub n1: usize,
    pub n2: usize,
    pub v1: f64,
    pub v2: f64,
    pub t1: f64,
    pub t2: f64,
    pub t4: f64,
}

pub fn branch_coefficients(params: &ModelParams, n1: usize, n2: usize) -> BranchCoefficients {
    let f = |n: usize| params.deformation.eval(n);
    let (x1, x2) = (n1 as f64, n2 as f64);
    let v1 = f(n1 + 1) * f(n2 + 1) * ((x1 + 1.0) * (x2 + 1.0)).sqrt();
    let v2 = f(n1 + 2) * f(n2 + 2) * ((x1 + 2.0) * (x2 + 2.0)).sqrt();

    let t1 = params.delta
        + 2.0 * params.beta2 * x2
        + params.chi1 * x1 * (x1 - 1.0)
        + params.chi2 * x2 * (x2 - 1.0)
        + params.chi12 * x1 * x2;
    let t2 = params.beta1 * (x1 + 1.0)
        + params.beta2 * (x2 + 1.0)
        + params.chi1 * x1 * (x1 + 1.0)
        + params.chi2 * x2 * (x2 + 1.0)
        + params.chi12 * (x1 + 1.0) * (x2 + 1.0);
    let chi2_term = match params.t4_convention {
        T4Convention::Corrected => params.chi2 * (x2 + 1.0) * (x2 + 2.0),
        T4Convention::MixedIndex => params.chi2 * (x1 + 1.0) * (x2 + 2.0),
    };
    let t4 = -params.delta
        + 2.0 * params.beta1 * (x1 + 2.0)
        + params.chi1 * (x1 + 1.0) * (x1 + 2.0)
        + chi2_term
        + params.chi12 * (x1 + 2.0) * (x2 + 2.0);

    BranchCoefficients { n1, n2, v1, v2, t1, t2, t4 }
}
