//! Independent numerical propagation at three fidelity levels:
//!
//! * post-RWA: the three slowly varying amplitudes of a cell with only the
//!   slow exponentials kept (the system the closed form solves),
//! * pre-RWA: the same cell with both fast and slow exponentials,
//! * full: the time-dependent effective Hamiltonian on the truncated
//!   `atom (x) atom (x) mode1 (x) mode2` space.
//!
//! All three use classical fixed-step fourth-order Runge-Kutta. Each output
//! interval is split into equal substeps, never longer than
//! [`StepControl::step`] and short enough that the fastest frequency of the
//! system advances by at most [`StepControl::max_phase`] radians per step.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{branch_coefficients, BranchCoefficients, CoherentWeights, FockTruncation, ModelParams};
use crate::observables::BranchFields;
use crate::solver::{AmplitudeSet, CellAmplitudes};

/// Largest tolerated drift of a conserved norm over a run.
pub const NORM_DRIFT_TOL: f64 = 1e-6;

/// Largest tolerated population on the two highest Fock levels.
pub const LEAK_TOL: f64 = 1e-8;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepControl {
    pub step: f64,
    /// Phase budget per step for the fastest frequency; `inf` disables the
    /// refinement and gives a plain fixed step.
    pub max_phase: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl { step: 1e-3, max_phase: 0.012 }
    }
}

impl StepControl {
    pub fn fixed(step: f64) -> Self {
        StepControl { step, max_phase: f64::INFINITY }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) || !(self.max_phase > 0.0) {
            return Err(Error::InvalidParams(format!(
                "integrator step {} and max_phase {} must be positive",
                self.step, self.max_phase
            )));
        }
        Ok(())
    }

    fn substeps(&self, dt: f64, omega: f64) -> usize {
        if dt <= 0.0 {
            return 0;
        }
        let by_step = (dt / self.step - 1e-9).ceil();
        let by_phase = if self.max_phase.is_finite() { (dt * omega / self.max_phase - 1e-9).ceil() } else { 0.0 };
        by_step.max(by_phase).max(1.0) as usize
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    let mut prev = 0.0;
    for &t in times {
        if !(t.is_finite() && t >= prev) {
            return Err(Error::InvalidParams(format!(
                "output times must be finite, nonnegative and ascending (got {t} after {prev})"
            )));
        }
        prev = t;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    PostRwa,
    PreRwa,
}

/// Time series of one cell's amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct CTrajectory {
    pub cell: (usize, usize),
    pub scheme: Scheme,
    /// Shortest substep used.
    pub step: f64,
    pub times: Vec<f64>,
    /// `(C1, C2, C4)`.
    pub slow: Vec<[C64; 3]>,
    /// `(A1, A2, A4)` with `A = C exp(-i T t)`.
    pub amplitudes: Vec<CellAmplitudes>,
}

fn weighted_norm(c: &[C64; 3]) -> f64 {
    c[0].norm_sqr() + 2.0 * c[1].norm_sqr() + c[2].norm_sqr()
}

fn neg_i(z: C64) -> C64 {
    C64::new(z.im, -z.re)
}

/// One RK4 step from `t` to `t + h`. `p` holds the phasors
/// `e^{i(w_j t + phi)}` at `t` and `half` the increments `e^{i w_j h/2}`, so
/// stage phasors come from multiplication rather than trigonometry. Returns
/// the new state and the phasors at `t + h`.
fn rk4_cell<F, const K: usize>(f: &F, p: &[C64; K], half: &[C64; K], h: f64, y: [C64; 3]) -> ([C64; 3], [C64; K])
where
    F: Fn(&[C64; K], &[C64; 3]) -> [C64; 3],
{
    let add = |y: &[C64; 3], k: &[C64; 3], s: f64| [y[0] + k[0] * s, y[1] + k[1] * s, y[2] + k[2] * s];
    let mid: [C64; K] = std::array::from_fn(|j| p[j] * half[j]);
    let end: [C64; K] = std::array::from_fn(|j| mid[j] * half[j]);
    let k1 = f(p, &y);
    let k2 = f(&mid, &add(&y, &k1, 0.5 * h));
    let k3 = f(&mid, &add(&y, &k2, 0.5 * h));
    let k4 = f(&end, &add(&y, &k3, h));
    let next = std::array::from_fn(|i| y[i] + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0));
    (next, end)
}

/// Post-RWA equations of one cell:
///
/// ```text
/// i C1' = l V1 e^{-i(a t + phi)} C2
/// i C2' = l/2 [V1 e^{i(a t + phi)} C1 + V2 e^{-i(b t + phi)} C4]
/// i C4' = l V2 e^{i(b t + phi)} C2
/// ```
pub fn integrate_rwa(
    params: &ModelParams,
    bc: &BranchCoefficients,
    times: &[f64],
    ctl: &StepControl,
) -> Result<CTrajectory> {
    let a = params.epsilon - (bc.t1 - bc.t2);
    let b = params.epsilon - (bc.t2 - bc.t4);
    let lam = params.lambda;
    let (v1, v2) = (bc.v1, bc.v2);
    let (g1, g2) = (lam * v1, lam * v2);
    let rhs = move |e: &[C64; 2], c: &[C64; 3]| {
        let (ea, eb) = (e[0], e[1]);
        [neg_i(ea.conj() * c[1] * g1), neg_i((ea * c[0] * g1 + eb.conj() * c[2] * g2) * 0.5), neg_i(eb * c[1] * g2)]
    };
    // Spectral radius of the coupling matrix plus the phasor frequencies.
    let omega = a.abs() + b.abs() + lam * (0.5 * (v1 * v1 + v2 * v2)).sqrt();
    propagate_cell(params, bc, times, ctl, Scheme::PostRwa, omega, [a, b], rhs)
}

/// Pre-RWA equations: every coupling carries both `e^{+i(eps + d)t}` and
/// `e^{-i(eps - d)t}` terms, `d` being `T1 - T2` or `T2 - T4`.
pub fn integrate_pre_rwa(
    params: &ModelParams,
    bc: &BranchCoefficients,
    times: &[f64],
    ctl: &StepControl,
) -> Result<CTrajectory> {
    let eps = params.epsilon;
    let d12 = bc.t1 - bc.t2;
    let d24 = bc.t2 - bc.t4;
    let lam = params.lambda;
    let (v1, v2) = (bc.v1, bc.v2);
    let (g1, g2) = (lam * v1, lam * v2);
    // e = [e^{i((eps+d12)t+phi)}, e^{i((eps-d12)t+phi)}, same for d24]
    let rhs = move |e: &[C64; 4], c: &[C64; 3]| {
        let up12 = e[0] + e[1].conj();
        let down12 = e[1] + e[0].conj();
        let up24 = e[2] + e[3].conj();
        let down24 = e[3] + e[2].conj();
        [neg_i(up12 * c[1] * g1), neg_i((down12 * c[0] * g1 + up24 * c[2] * g2) * 0.5), neg_i(down24 * c[1] * g2)]
    };
    let omega = eps.abs() + d12.abs() + d24.abs() + 2.0 * lam * (0.5 * (v1 * v1 + v2 * v2)).sqrt();
    let freqs = [eps + d12, eps - d12, eps + d24, eps - d24];
    propagate_cell(params, bc, times, ctl, Scheme::PreRwa, omega, freqs, rhs)
}

#[allow(clippy::too_many_arguments)]
fn propagate_cell<F, const K: usize>(
    params: &ModelParams,
    bc: &BranchCoefficients,
    times: &[f64],
    ctl: &StepControl,
    scheme: Scheme,
    omega: f64,
    freqs: [f64; K],
    rhs: F,
) -> Result<CTrajectory>
where
    F: Fn(&[C64; K], &[C64; 3]) -> [C64; 3],
{
    ctl.validate()?;
    check_times(times)?;
    let cell = (bc.n1, bc.n2);
    let mut y = [params.gamma[0], params.gamma[1], params.gamma[3]];
    let norm0 = weighted_norm(&y);
    let mut t = 0.0;
    let mut min_step = f64::INFINITY;
    let mut slow = Vec::with_capacity(times.len());
    let mut amplitudes = Vec::with_capacity(times.len());
    for &target in times {
        let n = ctl.substeps(target - t, omega);
        if n > 0 {
            let h = (target - t) / n as f64;
            min_step = min_step.min(h);
            // Phasors are re-anchored exactly at every output time.
            let mut p: [C64; K] = std::array::from_fn(|j| C64::from_polar(1.0, freqs[j] * t + params.phi));
            let half: [C64; K] = std::array::from_fn(|j| C64::from_polar(1.0, 0.5 * freqs[j] * h));
            for _ in 0..n {
                (y, p) = rk4_cell(&rhs, &p, &half, h, y);
            }
        }
        t = target;
        let drift = (weighted_norm(&y) - norm0).abs();
        if !(drift <= NORM_DRIFT_TOL) {
            return Err(Error::StepTooLarge { drift, cell: Some(cell) });
        }
        slow.push(y);
        amplitudes.push(CellAmplitudes {
            a1: y[0] * C64::from_polar(1.0, -bc.t1 * t),
            a2: y[1] * C64::from_polar(1.0, -bc.t2 * t),
            a4: y[2] * C64::from_polar(1.0, -bc.t4 * t),
        });
    }
    Ok(CTrajectory { cell, scheme, step: min_step, times: times.to_vec(), slow, amplitudes })
}

/// Integrates every cell of the grid and reassembles one [`AmplitudeSet`]
/// per output time.
pub fn oracle_amplitudes(
    params: &ModelParams,
    trunc: &FockTruncation,
    times: &[f64],
    ctl: &StepControl,
    scheme: Scheme,
) -> Result<Vec<AmplitudeSet>> {
    params.validate()?;
    params.check_truncation(trunc)?;
    let side = trunc.cells_per_mode();
    let trajectories = (0..side * side)
        .into_par_iter()
        .map(|i| {
            let bc = branch_coefficients(params, i / side, i % side);
            match scheme {
                Scheme::PostRwa => integrate_rwa(params, &bc, times, ctl),
                Scheme::PreRwa => integrate_pre_rwa(params, &bc, times, ctl),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let cells = trajectories.iter().map(|tr| tr.amplitudes[k]).collect();
            AmplitudeSet::new(t, trunc.n_max, cells)
        })
        .collect())
}

/// State on the truncated product basis `|s, N1, N2>`, `s` in
/// `ee, eg, ge, gg` order, `0 <= N1, N2 < levels`. Flat index
/// `(s * levels + N1) * levels + N2`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedState {
    pub t: f64,
    pub levels: usize,
    pub amps: Vec<C64>,
}

impl TruncatedState {
    pub fn index(levels: usize, s: usize, n1: usize, n2: usize) -> usize {
        (s * levels + n1) * levels + n2
    }

    /// `(gamma1|ee> + gamma2|eg> + gamma3|ge> + gamma4|gg>) (x) |alpha1> (x) |alpha2>`,
    /// truncated at `n_max + 2`.
    pub fn product_initial(params: &ModelParams, trunc: &FockTruncation) -> Self {
        let w = CoherentWeights::new(params, trunc);
        let levels = trunc.levels();
        let mut amps = vec![C64::new(0.0, 0.0); 4 * levels * levels];
        for (s, g) in params.gamma.iter().enumerate() {
            for n1 in 0..levels {
                for n2 in 0..levels {
                    amps[Self::index(levels, s, n1, n2)] = g * w.mode1[n1] * w.mode2[n2];
                }
            }
        }
        TruncatedState { t: 0.0, levels, amps }
    }

    /// The ansatz state built from a set of cell amplitudes.
    pub fn from_ansatz(amps: &AmplitudeSet, weights: &CoherentWeights) -> Self {
        let fields = BranchFields::from_ansatz(amps, weights);
        let levels = fields.levels();
        let amps_flat = (0..4).flat_map(|s| fields.branch(s).to_vec()).collect();
        TruncatedState { t: amps.t, levels, amps: amps_flat }
    }

    pub fn fields(&self) -> BranchFields {
        let l2 = self.levels * self.levels;
        BranchFields::new(self.levels, std::array::from_fn(|s| self.amps[s * l2..(s + 1) * l2].to_vec()))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Population with either photon number on the two highest levels.
    pub fn edge_population(&self) -> f64 {
        let l = self.levels;
        let edge = l.saturating_sub(2);
        let mut pop = 0.0;
        for s in 0..4 {
            for n1 in 0..l {
                for n2 in 0..l {
                    if n1 >= edge || n2 >= edge {
                        pop += self.amps[Self::index(l, s, n1, n2)].norm_sqr();
                    }
                }
            }
        }
        pop
    }

    /// Reads the ansatz amplitudes back off the state: `A1 = psi_ee(n)/(q q)`,
    /// `A2` the mean of the two middle branches at `n + 1`, `A4 = psi_gg(n + 2)/(q q)`.
    /// Cells whose weight underflows are set to zero.
    pub fn project_onto_ansatz(&self, weights: &CoherentWeights) -> AmplitudeSet {
        let l = self.levels;
        let n_max = l - 3;
        let side = n_max + 1;
        let cells = (0..side * side)
            .map(|i| {
                let (n1, n2) = (i / side, i % side);
                let q = weights.mode1[n1] * weights.mode2[n2];
                if q.norm() < 1e-150 {
                    return CellAmplitudes::default();
                }
                let at = |s, a, b| self.amps[Self::index(l, s, a, b)];
                CellAmplitudes {
                    a1: at(0, n1, n2) / q,
                    a2: (at(1, n1 + 1, n2 + 1) + at(2, n1 + 1, n2 + 1)) * 0.5 / q,
                    a4: at(3, n1 + 2, n2 + 2) / q,
                }
            })
            .collect();
        AmplitudeSet::new(self.t, n_max, cells)
    }
}

/// Number of excited atoms in atomic basis state `s`.
fn excitations(s: usize) -> usize {
    [2, 1, 1, 0][s]
}

/// Whether the coupling keeps the `e^{-+i Delta t}` factors next to the
/// `Delta sigma_z / 2` term.
///
/// With the factors kept the detuning enters twice and transfer is resonant
/// near `epsilon = 0`. Dropping them gives exactly the amplitude equations the
/// closed form starts from, resonant near `epsilon = Delta`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetuningPhase {
    #[default]
    Kept,
    Dropped,
}

/// Effective Hamiltonian on the truncated space,
///
/// ```text
/// H(t) = D + g(t) [e^{-i Delta t} X + e^{i Delta t} X^dag]
/// ```
///
/// with `D` the diagonal detuning, Stark and Kerr part and
/// `X = sum_{i=A,B} sigma_+^i R1 R2`. [`DetuningPhase::Dropped`] removes the
/// `e^{-+i Delta t}` factors.
#[derive(Clone, Debug)]
pub struct FullHamiltonian {
    pub levels: usize,
    pub diag: Vec<f64>,
    /// `(row, col, value)` of `X`: row has one more excitation and one photon
    /// fewer per mode than col.
    pub raise: Vec<(usize, usize, f64)>,
    lambda: f64,
    epsilon: f64,
    phi: f64,
    /// Frequency of the coupling phase factor, zero when dropped.
    phase_rate: f64,
}

impl FullHamiltonian {
    pub fn new(params: &ModelParams, levels: usize) -> Self {
        Self::with_phase(params, levels, DetuningPhase::Kept)
    }

    pub fn with_phase(params: &ModelParams, levels: usize, phase: DetuningPhase) -> Self {
        let idx = |s, a, b| TruncatedState::index(levels, s, a, b);
        let mut diag = vec![0.0; 4 * levels * levels];
        let mut raise = Vec::new();
        for s in 0..4 {
            let excited = [s / 2 == 0, s % 2 == 0];
            for n1 in 0..levels {
                for n2 in 0..levels {
                    let (x1, x2) = (n1 as f64, n2 as f64);
                    let mut d = 0.0;
                    for e in excited {
                        d += if e {
                            0.5 * params.delta + params.beta2 * x2
                        } else {
                            -0.5 * params.delta + params.beta1 * x1
                        };
                    }
                    d += params.chi1 * x1 * (x1 - 1.0) + params.chi2 * x2 * (x2 - 1.0) + params.chi12 * x1 * x2;
                    diag[idx(s, n1, n2)] = d;
                }
            }
        }
        let f = |n: usize| params.deformation.eval(n);
        for n1 in 1..levels {
            for n2 in 1..levels {
                let v = f(n1) * f(n2) * ((n1 * n2) as f64).sqrt();
                if v == 0.0 {
                    continue;
                }
                // atom A: g -> e, atom B spectator
                for b in 0..2 {
                    raise.push((idx(b, n1 - 1, n2 - 1), idx(2 + b, n1, n2), v));
                }
                // atom B: g -> e, atom A spectator
                for a in 0..2 {
                    raise.push((idx(2 * a, n1 - 1, n2 - 1), idx(2 * a + 1, n1, n2), v));
                }
            }
        }
        FullHamiltonian {
            levels,
            diag,
            raise,
            lambda: params.lambda,
            epsilon: params.epsilon,
            phi: params.phi,
            phase_rate: match phase {
                DetuningPhase::Kept => params.delta,
                DetuningPhase::Dropped => 0.0,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `(N1 + excitations, N2 + excitations)`, conserved by `H`.
    pub fn block_of(&self, index: usize) -> (usize, usize) {
        let l = self.levels;
        let (s, rest) = (index / (l * l), index % (l * l));
        let e = excitations(s);
        (rest / l + e, rest % l + e)
    }

    /// Gershgorin bound on the spectral radius of `H(t)` for any `t`.
    pub fn spectral_bound(&self) -> f64 {
        let mut rows = vec![0.0; self.dim()];
        for &(r, c, v) in &self.raise {
            rows[r] += v;
            rows[c] += v;
        }
        self.diag.iter().zip(&rows).map(|(d, r)| d.abs() + self.lambda * r).fold(0.0, f64::max)
    }

    /// `out = -i H(t) psi`.
    pub fn derivative(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        let g = self.lambda * (self.epsilon * t + self.phi).cos();
        let c = g * C64::from_polar(1.0, -self.phase_rate * t);
        for ((o, d), p) in out.iter_mut().zip(&self.diag).zip(psi) {
            *o = d * p;
        }
        for &(r, col, v) in &self.raise {
            out[r] += c * v * psi[col];
            out[col] += c.conj() * v * psi[r];
        }
        for o in out.iter_mut() {
            *o *= -I;
        }
    }
}

/// Propagates `initial` under the effective Hamiltonian, returning the state
/// at each output time.
pub fn integrate_full(
    params: &ModelParams,
    trunc: &FockTruncation,
    initial: &TruncatedState,
    times: &[f64],
    ctl: &StepControl,
) -> Result<Vec<TruncatedState>> {
    integrate_full_with(params, trunc, initial, times, ctl, DetuningPhase::Kept)
}

pub fn integrate_full_with(
    params: &ModelParams,
    trunc: &FockTruncation,
    initial: &TruncatedState,
    times: &[f64],
    ctl: &StepControl,
    phase: DetuningPhase,
) -> Result<Vec<TruncatedState>> {
    params.validate_physical()?;
    params.check_truncation(trunc)?;
    ctl.validate()?;
    check_times(times)?;
    let levels = trunc.levels();
    if initial.levels != levels {
        return Err(Error::InvalidParams(format!(
            "initial state has {} levels, truncation needs {levels}",
            initial.levels
        )));
    }
    let h_eff = FullHamiltonian::with_phase(params, levels, phase);
    let omega = h_eff.spectral_bound();
    let dim = h_eff.dim();

    let mut psi = initial.amps.clone();
    let norm0 = initial.norm_sqr();
    let mut t = initial.t;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![C64::new(0.0, 0.0); dim],
        vec![C64::new(0.0, 0.0); dim],
        vec![C64::new(0.0, 0.0); dim],
        vec![C64::new(0.0, 0.0); dim],
        vec![C64::new(0.0, 0.0); dim],
    );
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        if target < t {
            return Err(Error::InvalidParams(format!("output time {target} precedes the initial time {t}")));
        }
        let n = ctl.substeps(target - t, omega);
        let h = if n > 0 { (target - t) / n as f64 } else { 0.0 };
        for k in 0..n {
            let ts = t + k as f64 * h;
            h_eff.derivative(ts, &psi, &mut k1);
            axpy(&psi, &k1, 0.5 * h, &mut tmp);
            h_eff.derivative(ts + 0.5 * h, &tmp, &mut k2);
            axpy(&psi, &k2, 0.5 * h, &mut tmp);
            h_eff.derivative(ts + 0.5 * h, &tmp, &mut k3);
            axpy(&psi, &k3, h, &mut tmp);
            h_eff.derivative(ts + h, &tmp, &mut k4);
            for i in 0..dim {
                psi[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
            }
        }
        t = target;
        let state = TruncatedState { t, levels, amps: psi.clone() };
        let drift = (state.norm_sqr() - norm0).abs();
        if !(drift <= NORM_DRIFT_TOL) {
            return Err(Error::StepTooLarge { drift, cell: None });
        }
        let population = state.edge_population();
        if population > LEAK_TOL {
            return Err(Error::TruncationLeak { population });
        }
        out.push(state);
    }
    Ok(out)
}

/// Which of the three integrators a convergence study runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleLevel {
    PostRwa,
    PreRwa,
    Full,
}

impl OracleLevel {
    pub const ALL: [OracleLevel; 3] = [OracleLevel::PostRwa, OracleLevel::PreRwa, OracleLevel::Full];
}

/// Step-halving study: errors at steps `h` and `h/2` against an `h/4`
/// reference, all at a fixed step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Convergence {
    pub level: OracleLevel,
    pub step: f64,
    pub coarse_error: f64,
    pub fine_error: f64,
}

impl Convergence {
    /// Close to `16 (1 + 1/16) (1 - 1/256) ~ 17` for a fourth-order scheme.
    pub fn ratio(&self) -> f64 {
        self.coarse_error / self.fine_error
    }
}

pub fn step_halving(
    params: &ModelParams,
    trunc: &FockTruncation,
    level: OracleLevel,
    t_end: f64,
    step: f64,
) -> Result<Convergence> {
    let times = [t_end];
    let run = |h: f64| -> Result<Vec<C64>> {
        let ctl = StepControl::fixed(h);
        match level {
            OracleLevel::PostRwa | OracleLevel::PreRwa => {
                let scheme = if level == OracleLevel::PostRwa { Scheme::PostRwa } else { Scheme::PreRwa };
                let set = oracle_amplitudes(params, trunc, &times, &ctl, scheme)?.remove(0);
                Ok(set.cells.iter().flat_map(|c| [c.a1, c.a2, c.a4]).collect())
            }
            OracleLevel::Full => {
                let init = TruncatedState::product_initial(params, trunc);
                Ok(integrate_full(params, trunc, &init, &times, &ctl)?.remove(0).amps)
            }
        }
    };
    let dist = |x: &[C64], y: &[C64]| x.iter().zip(y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let reference = run(0.25 * step)?;
    let coarse = run(step)?;
    let fine = run(0.5 * step)?;
    Ok(Convergence { level, step, coarse_error: dist(&coarse, &reference), fine_error: dist(&fine, &reference) })
}

fn axpy(y: &[C64], k: &[C64], s: f64, out: &mut [C64]) {
    for ((o, a), b) in out.iter_mut().zip(y).zip(k) {
        *o = a + b * s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::choose_truncation;
    use crate::solver::CellSolution;

    fn preset_like() -> ModelParams {
        let h = 1.0 / 3f64.sqrt();
        ModelParams {
            delta: 10.0,
            chi1: 1.0,
            chi2: 1.0,
            gamma: [C64::new(h, 0.0), C64::new(h, 0.0), C64::new(h, 0.0), C64::new(0.0, 0.0)],
            ..Default::default()
        }
    }

    #[test]
    fn lambda_zero_keeps_slow_amplitudes_constant() {
        let p = ModelParams { lambda: 0.0, ..preset_like() };
        let bc = branch_coefficients(&p, 3, 2);
        let times: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        for traj in [
            integrate_rwa(&p, &bc, &times, &StepControl::default()).unwrap(),
            integrate_pre_rwa(&p, &bc, &times, &StepControl::default()).unwrap(),
        ] {
            for c in &traj.slow {
                assert_eq!(*c, [p.gamma[0], p.gamma[1], p.gamma[3]]);
            }
        }
    }

    #[test]
    fn rwa_cell_matches_closed_form() {
        let p = ModelParams { epsilon: 0.8, phi: 0.3, lambda: 1.7, ..preset_like() };
        let times: Vec<f64> = (0..=20).map(|k| 0.25 * k as f64).collect();
        for (n1, n2) in [(0, 0), (2, 5), (6, 6)] {
            let sol = CellSolution::new(&p, n1, n2).unwrap();
            let traj = integrate_rwa(&p, &sol.coefficients, &times, &StepControl::default()).unwrap();
            for (t, got) in times.iter().zip(&traj.amplitudes) {
                let want = sol.amplitudes(&p, *t);
                assert!(got.max_deviation(&want) < 1e-8, "cell ({n1},{n2}) t={t}");
            }
        }
    }

    #[test]
    fn coarse_steps_are_rejected() {
        let p = ModelParams { lambda: 5.0, ..preset_like() };
        let bc = branch_coefficients(&p, 8, 8);
        let ctl = StepControl::fixed(0.5);
        assert!(matches!(integrate_rwa(&p, &bc, &[10.0], &ctl), Err(Error::StepTooLarge { cell: Some((8, 8)), .. })));
    }

    #[test]
    fn descending_times_are_rejected() {
        let p = preset_like();
        let bc = branch_coefficients(&p, 0, 0);
        assert!(integrate_rwa(&p, &bc, &[1.0, 0.5], &StepControl::default()).is_err());
    }

    #[test]
    fn substep_count_respects_both_limits() {
        let ctl = StepControl { step: 1e-3, max_phase: 0.02 };
        assert_eq!(ctl.substeps(0.1, 1.0), 100);
        assert_eq!(ctl.substeps(0.1, 100.0), 500);
        assert_eq!(ctl.substeps(0.0, 100.0), 0);
        assert_eq!(StepControl::fixed(1e-3).substeps(0.1, 1e9), 100);
    }

    #[test]
    fn hamiltonian_couplings_stay_inside_blocks() {
        let p = ModelParams { deformation: crate::model::Deformation::Sqrt, ..preset_like() };
        let h = FullHamiltonian::new(&p, 7);
        assert!(!h.raise.is_empty());
        for &(r, c, _) in &h.raise {
            assert_eq!(h.block_of(r), h.block_of(c));
        }
    }

    #[test]
    fn diagonal_generator_preserves_populations() {
        let p = ModelParams { lambda: 0.0, beta1: 0.5, beta2: -0.3, chi12: 0.7, ..preset_like() };
        let trunc = choose_truncation(p.alpha1, p.alpha2, 1e-12).unwrap();
        let init = TruncatedState::product_initial(&p, &trunc);
        let states = integrate_full(&p, &trunc, &init, &[2.5], &StepControl::default()).unwrap();
        for (a, b) in init.amps.iter().zip(&states[0].amps) {
            assert!((a.norm_sqr() - b.norm_sqr()).abs() < 1e-10);
        }
    }

    #[test]
    fn ansatz_round_trip_through_truncated_state() {
        let p = preset_like();
        let trunc = choose_truncation(p.alpha1, p.alpha2, 1e-12).unwrap();
        let w = CoherentWeights::new(&p, &trunc);
        let amps = crate::solver::amplitudes_at(&p, &trunc, 0.7).unwrap();
        let state = TruncatedState::from_ansatz(&amps, &w);
        assert!((state.norm_sqr() - amps.norm(&w)).abs() < 1e-14);
        let back = state.project_onto_ansatz(&w);
        assert!(back.max_deviation(&amps) < 1e-9);
    }
}
