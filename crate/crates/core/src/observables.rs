//! Field and atomic observables of the evolved state.
//!
//! Everything is computed from [`BranchFields`]: the state written as
//! `sum_s |s> (x) |psi_s>` with `s` running over `|e,e>, |e,g>, |g,e>, |g,g>`
//! and `psi_s` a two-mode field wavefunction on the truncated grid. The
//! reduced field and atomic states are explicit partial traces of this pure
//! state, so field coherences between different `(n1, n2)` are kept.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix4, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CoherentWeights;
use crate::solver::AmplitudeSet;

/// Default cap on each exponent of [`field_moment`].
pub const EXPONENT_CAP: usize = 4;

/// Mean photon numbers at or below this are treated as vacuum.
pub const ZERO_MEAN_TOL: f64 = 1e-14;

/// Atomic basis order used everywhere: `|e,e>, |e,g>, |g,e>, |g,g>`.
pub const ATOMIC_BASIS: [&str; 4] = ["ee", "eg", "ge", "gg"];

/// Field wavefunction attached to each atomic basis state.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchFields {
    levels: usize,
    branches: [Vec<C64>; 4],
}

impl BranchFields {
    /// `branches[s][n1 * levels + n2]` is the amplitude of `|s, n1, n2>`.
    pub fn new(levels: usize, branches: [Vec<C64>; 4]) -> Self {
        for b in &branches {
            assert_eq!(b.len(), levels * levels, "branch length does not match levels");
        }
        BranchFields { levels, branches }
    }

    /// Expands the ansatz: cell `(n1, n2)` contributes
    /// `q_n1 q_n2 [A1 |ee,n1,n2> + A2 (|eg> + |ge>)|n1+1,n2+1> + A4 |gg,n1+2,n2+2>]`.
    pub fn from_ansatz(amps: &AmplitudeSet, weights: &CoherentWeights) -> Self {
        let levels = amps.n_max + 3;
        assert!(weights.levels() > amps.n_max, "coherent weights shorter than the grid");
        let mut branches: [Vec<C64>; 4] = std::array::from_fn(|_| vec![C64::new(0.0, 0.0); levels * levels]);
        for ((n1, n2), cell) in amps.iter_cells() {
            let q = weights.mode1[n1] * weights.mode2[n2];
            branches[0][n1 * levels + n2] = q * cell.a1;
            let mid = (n1 + 1) * levels + n2 + 1;
            branches[1][mid] = q * cell.a2;
            branches[2][mid] = q * cell.a2;
            branches[3][(n1 + 2) * levels + n2 + 2] = q * cell.a4;
        }
        BranchFields { levels, branches }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn branch(&self, s: usize) -> &[C64] {
        &self.branches[s]
    }

    #[inline]
    fn amp(&self, s: usize, n1: usize, n2: usize) -> C64 {
        self.branches[s][n1 * self.levels + n2]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.branches.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    /// `<a1^dag^p1 a1^q1 a2^dag^p2 a2^q2>` on the reduced field state,
    /// evaluated as `sum_s <a1^p1 a2^p2 psi_s | a1^q1 a2^q2 psi_s>`.
    pub fn moment(&self, p1: usize, q1: usize, p2: usize, q2: usize) -> Result<C64> {
        for e in [p1, q1, p2, q2] {
            if e > EXPONENT_CAP {
                return Err(Error::ExponentCap { exponent: e, cap: EXPONENT_CAP });
            }
        }
        let l = self.levels;
        let lim1 = l.saturating_sub(p1.max(q1));
        let lim2 = l.saturating_sub(p2.max(q2));
        let mut total = C64::new(0.0, 0.0);
        for m1 in 0..lim1 {
            let f1 = ladder(m1, p1) * ladder(m1, q1);
            for m2 in 0..lim2 {
                let f = f1 * ladder(m2, p2) * ladder(m2, q2);
                let mut acc = C64::new(0.0, 0.0);
                for s in 0..4 {
                    acc += self.amp(s, m1 + p1, m2 + p2).conj() * self.amp(s, m1 + q1, m2 + q2);
                }
                total += f * acc;
            }
        }
        Ok(total)
    }

    pub fn joint_pnd(&self) -> JointPnd {
        let l = self.levels;
        let probs = (0..l * l).map(|i| self.branches.iter().map(|b| b[i].norm_sqr()).sum()).collect();
        JointPnd { levels: l, probs }
    }

    pub fn atom_density(&self) -> AtomDensity {
        let mut m = Matrix4::<C64>::zeros();
        for i in 0..4 {
            for j in i..4 {
                let v: C64 = self.branches[i].iter().zip(&self.branches[j]).map(|(x, y)| x * y.conj()).sum();
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        AtomDensity { matrix: m }
    }
}

/// `sqrt((m+1)(m+2)...(m+k))`, the factor picked up by `a^k` acting on `|m+k>`.
#[inline]
fn ladder(m: usize, k: usize) -> f64 {
    (1..=k).map(|j| (m + j) as f64).product::<f64>().sqrt()
}

/// Joint photon number distribution `P(n1, n2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPnd {
    pub levels: usize,
    probs: Vec<f64>,
}

impl JointPnd {
    /// Zero outside the truncated grid.
    pub fn get(&self, n1: usize, n2: usize) -> f64 {
        if n1 < self.levels && n2 < self.levels {
            self.probs[n1 * self.levels + n2]
        } else {
            0.0
        }
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn marginal(&self, mode: Mode) -> Vec<f64> {
        let l = self.levels;
        (0..l)
            .map(|n| match mode {
                Mode::Mode1 => (0..l).map(|k| self.get(n, k)).sum(),
                Mode::Mode2 => (0..l).map(|k| self.get(k, n)).sum(),
            })
            .collect()
    }

    /// Distribution of `N1 + N2`.
    pub fn total_number(&self) -> Vec<f64> {
        let l = self.levels;
        let mut out = vec![0.0; 2 * l - 1];
        for n1 in 0..l {
            for n2 in 0..l {
                out[n1 + n2] += self.get(n1, n2);
            }
        }
        out
    }
}

/// Reduced atom-atom density matrix in the basis `|e,e>, |e,g>, |g,e>, |g,g>`.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomDensity {
    pub matrix: Matrix4<C64>,
}

impl AtomDensity {
    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        let herm = (self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(herm).eigenvalues;
        let mut out = [eig[0], eig[1], eig[2], eig[3]];
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// `max(|rho22 - rho33|, |rho12 - rho13|, |rho24 - rho34|)`, zero whenever
    /// the two middle branches coincide.
    pub fn exchange_asymmetry(&self) -> f64 {
        let m = &self.matrix;
        (m[(1, 1)] - m[(2, 2)]).norm().max((m[(0, 1)] - m[(0, 2)]).norm()).max((m[(1, 3)] - m[(2, 3)]).norm())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Mode1,
    Mode2,
}

impl Mode {
    /// `(p1, q1, p2, q2)` for `a^dag^p a^q` on this mode.
    fn exponents(self, p: usize, q: usize) -> (usize, usize, usize, usize) {
        match self {
            Mode::Mode1 => (p, q, 0, 0),
            Mode::Mode2 => (0, 0, p, q),
        }
    }
}

/// Operator whose quadratures [`quadrature_squeezing`] examines: a single
/// mode's `a`, or the pair operator `a1 a2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SqueezeTarget {
    Mode1,
    Mode2,
    Pair,
}

impl SqueezeTarget {
    fn exponents(self, p: usize, q: usize) -> (usize, usize, usize, usize) {
        match self {
            SqueezeTarget::Mode1 => (p, q, 0, 0),
            SqueezeTarget::Mode2 => (0, 0, p, q),
            SqueezeTarget::Pair => (p, q, p, q),
        }
    }
}

pub fn field_moment(
    amps: &AmplitudeSet,
    weights: &CoherentWeights,
    p1: usize,
    q1: usize,
    p2: usize,
    q2: usize,
) -> Result<C64> {
    BranchFields::from_ansatz(amps, weights).moment(p1, q1, p2, q2)
}

pub fn joint_pnd(amps: &AmplitudeSet, weights: &CoherentWeights) -> JointPnd {
    BranchFields::from_ansatz(amps, weights).joint_pnd()
}

/// Mandel `Q = (<N^2> - <N>^2)/<N> - 1` of one mode from its marginal
/// photon number distribution.
pub fn mandel_q(amps: &AmplitudeSet, weights: &CoherentWeights, mode: Mode) -> Result<f64> {
    mandel_q_of(&BranchFields::from_ansatz(amps, weights), mode)
}

pub fn mandel_q_of(fields: &BranchFields, mode: Mode) -> Result<f64> {
    q_from_distribution(&fields.joint_pnd().marginal(mode))
}

/// Mandel `Q` of the total photon number `N1 + N2`. An exploratory variant;
/// the single-mode form is the standard one.
pub fn mandel_q_total_of(fields: &BranchFields) -> Result<f64> {
    q_from_distribution(&fields.joint_pnd().total_number())
}

fn q_from_distribution(p: &[f64]) -> Result<f64> {
    let (mean, second) = p.iter().enumerate().fold((0.0, 0.0), |(m, s), (n, &pn)| {
        let n = n as f64;
        (m + n * pn, s + n * n * pn)
    });
    if mean <= ZERO_MEAN_TOL {
        return Err(Error::ZeroMeanPhotonNumber);
    }
    Ok((second - mean * mean) / mean - 1.0)
}

/// Mandel `Q` from the moments `<a^dag a>` and `<a^dag^2 a^2>`.
pub fn mandel_q_from_moments(fields: &BranchFields, mode: Mode) -> Result<f64> {
    let (p1, q1, p2, q2) = mode.exponents(1, 1);
    let n = fields.moment(p1, q1, p2, q2)?.re;
    let (p1, q1, p2, q2) = mode.exponents(2, 2);
    let nn = fields.moment(p1, q1, p2, q2)?.re;
    if n <= ZERO_MEAN_TOL {
        return Err(Error::ZeroMeanPhotonNumber);
    }
    Ok((nn + n - n * n) / n - 1.0)
}

/// `g2(0) = <a^dag^2 a^2> / <a^dag a>^2` of one mode.
pub fn g2_zero(amps: &AmplitudeSet, weights: &CoherentWeights, mode: Mode) -> Result<f64> {
    g2_zero_of(&BranchFields::from_ansatz(amps, weights), mode)
}

pub fn g2_zero_of(fields: &BranchFields, mode: Mode) -> Result<f64> {
    let (p1, q1, p2, q2) = mode.exponents(1, 1);
    let n = fields.moment(p1, q1, p2, q2)?.re;
    let (p1, q1, p2, q2) = mode.exponents(2, 2);
    let nn = fields.moment(p1, q1, p2, q2)?.re;
    if n <= ZERO_MEAN_TOL {
        return Err(Error::ZeroMeanPhotonNumber);
    }
    Ok(nn / (n * n))
}

/// `g2(0)` as `sum n(n-1) P(n) / (sum n P(n))^2` over the marginal distribution.
pub fn g2_from_pnd(fields: &BranchFields, mode: Mode) -> Result<f64> {
    let p = fields.joint_pnd().marginal(mode);
    let (mean, fact2) = p.iter().enumerate().fold((0.0, 0.0), |(m, f), (n, &pn)| {
        let n = n as f64;
        (m + n * pn, f + n * (n - 1.0) * pn)
    });
    if mean <= ZERO_MEAN_TOL {
        return Err(Error::ZeroMeanPhotonNumber);
    }
    Ok(fact2 / (mean * mean))
}

/// Normally ordered quadrature variances `(s_x, s_p)`; a negative entry
/// flags squeezing below the coherent-state level.
pub fn quadrature_squeezing(
    amps: &AmplitudeSet,
    weights: &CoherentWeights,
    target: SqueezeTarget,
) -> Result<(f64, f64)> {
    squeezing_of(&BranchFields::from_ansatz(amps, weights), target)
}

pub fn squeezing_of(fields: &BranchFields, target: SqueezeTarget) -> Result<(f64, f64)> {
    let m = |p, q| {
        let (p1, q1, p2, q2) = target.exponents(p, q);
        fields.moment(p1, q1, p2, q2)
    };
    let number = m(1, 1)?;
    let a = m(0, 1)?;
    let ad = m(1, 0)?;
    let a_sq = m(0, 2)?;
    let ad_sq = m(2, 0)?;
    let coherent = a_sq + ad_sq - a * a - ad * ad;
    let common = 2.0 * number - 2.0 * a * ad;
    Ok(((common + coherent).re, (common - coherent).re))
}

pub fn atom_density(amps: &AmplitudeSet, weights: &CoherentWeights) -> AtomDensity {
    BranchFields::from_ansatz(amps, weights).atom_density()
}

/// `1 - Tr(rho^2)`.
pub fn linear_entropy(rho: &AtomDensity) -> f64 {
    1.0 - rho.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// A scalar column of a sweep table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Observable {
    /// `P(n1, n2)`.
    Pnd {
        n1: usize,
        n2: usize,
    },
    MandelQ(Mode),
    /// Mandel `Q` of `N1 + N2` (exploratory).
    MandelQTotal,
    G2(Mode),
    SqueezeX(SqueezeTarget),
    SqueezeP(SqueezeTarget),
    LinearEntropy,
    /// Populations of the atomic basis states, `rho_ss`.
    AtomPopulation(usize),
    /// Total probability retained on the truncated grid.
    Norm,
}

impl Observable {
    pub fn evaluate(&self, fields: &BranchFields) -> Result<f64> {
        match *self {
            Observable::Pnd { n1, n2 } => Ok(fields.joint_pnd().get(n1, n2)),
            Observable::MandelQ(mode) => mandel_q_of(fields, mode),
            Observable::MandelQTotal => mandel_q_total_of(fields),
            Observable::G2(mode) => g2_zero_of(fields, mode),
            Observable::SqueezeX(t) => squeezing_of(fields, t).map(|s| s.0),
            Observable::SqueezeP(t) => squeezing_of(fields, t).map(|s| s.1),
            Observable::LinearEntropy => Ok(linear_entropy(&fields.atom_density())),
            Observable::AtomPopulation(s) => Ok(fields.atom_density().matrix[(s, s)].re),
            Observable::Norm => Ok(fields.norm_sqr()),
        }
    }
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Mode1 => "mode1",
        Mode::Mode2 => "mode2",
    }
}

fn target_name(t: SqueezeTarget) -> &'static str {
    match t {
        SqueezeTarget::Mode1 => "mode1",
        SqueezeTarget::Mode2 => "mode2",
        SqueezeTarget::Pair => "pair",
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Observable::Pnd { n1, n2 } => write!(f, "pnd({n1},{n2})"),
            Observable::MandelQ(m) => write!(f, "mandel_q({})", mode_name(m)),
            Observable::MandelQTotal => write!(f, "mandel_q(total)"),
            Observable::G2(m) => write!(f, "g2({})", mode_name(m)),
            Observable::SqueezeX(t) => write!(f, "sx({})", target_name(t)),
            Observable::SqueezeP(t) => write!(f, "sp({})", target_name(t)),
            Observable::LinearEntropy => write!(f, "linear_entropy"),
            Observable::AtomPopulation(s) => write!(f, "population({})", ATOMIC_BASIS[s]),
            Observable::Norm => write!(f, "norm"),
        }
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParams(format!("unknown observable '{s}'"));
        let s = s.trim();
        let (name, arg) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], Some(&s[i + 1..s.len() - 1])),
            Some(_) => return Err(bad()),
            None => (s, None),
        };
        let mode = |a: Option<&str>| match a.map(str::trim) {
            None | Some("mode1") => Ok(Mode::Mode1),
            Some("mode2") => Ok(Mode::Mode2),
            _ => Err(bad()),
        };
        let target = |a: Option<&str>| match a.map(str::trim) {
            None | Some("mode1") => Ok(SqueezeTarget::Mode1),
            Some("mode2") => Ok(SqueezeTarget::Mode2),
            Some("pair") => Ok(SqueezeTarget::Pair),
            _ => Err(bad()),
        };
        match name {
            "pnd" => {
                let arg = arg.ok_or_else(bad)?;
                let mut it = arg.split(',').map(|x| x.trim().parse::<usize>());
                match (it.next(), it.next(), it.next()) {
                    (Some(Ok(n1)), Some(Ok(n2)), None) => Ok(Observable::Pnd { n1, n2 }),
                    _ => Err(bad()),
                }
            }
            "mandel_q" if arg.map(str::trim) == Some("total") => Ok(Observable::MandelQTotal),
            "mandel_q" => mode(arg).map(Observable::MandelQ),
            "g2" => mode(arg).map(Observable::G2),
            "sx" => target(arg).map(Observable::SqueezeX),
            "sp" => target(arg).map(Observable::SqueezeP),
            "linear_entropy" if arg.is_none() => Ok(Observable::LinearEntropy),
            "norm" if arg.is_none() => Ok(Observable::Norm),
            "population" => {
                let a = arg.ok_or_else(bad)?.trim();
                ATOMIC_BASIS.iter().position(|b| *b == a).map(Observable::AtomPopulation).ok_or_else(bad)
            }
            _ => Err(bad()),
        }
    }
}

impl Serialize for Observable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Observable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{choose_truncation, ModelParams};
    use crate::solver::{amplitudes_at, CellAmplitudes};
    use approx::assert_abs_diff_eq;

    fn coherent_fields(alpha1: C64, alpha2: C64) -> (AmplitudeSet, CoherentWeights) {
        let p = ModelParams { alpha1, alpha2, delta: 5.0, ..Default::default() };
        let trunc = choose_truncation(alpha1, alpha2, 1e-13).unwrap();
        let amps = amplitudes_at(&p, &trunc, 0.0).unwrap();
        (amps, CoherentWeights::new(&p, &trunc))
    }

    #[test]
    fn coherent_state_limits() {
        let (amps, w) = coherent_fields(C64::new(1.0, 0.0), C64::new(1.0, 0.0));
        assert_abs_diff_eq!(field_moment(&amps, &w, 0, 0, 0, 0).unwrap().re, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(field_moment(&amps, &w, 1, 1, 1, 1).unwrap().re, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(mandel_q(&amps, &w, Mode::Mode1).unwrap(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(g2_zero(&amps, &w, Mode::Mode2).unwrap(), 1.0, epsilon = 1e-9);
        let (sx, sp) = quadrature_squeezing(&amps, &w, SqueezeTarget::Mode1).unwrap();
        assert_abs_diff_eq!(sx, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sp, 0.0, epsilon = 1e-9);
        let rho = atom_density(&amps, &w);
        assert_abs_diff_eq!(rho.matrix[(0, 0)].re, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(linear_entropy(&rho), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn initial_pnd_is_product_poisson() {
        let (amps, w) = coherent_fields(C64::new(0.8, 0.3), C64::new(-1.1, 0.2));
        let pnd = joint_pnd(&amps, &w);
        let (m1, m2) = (0.73f64, 1.25f64);
        let mut fact = [1.0f64; 12];
        for k in 1..12 {
            fact[k] = fact[k - 1] * k as f64;
        }
        for n1 in 0..10 {
            for n2 in 0..10 {
                let want = (-m1).exp() * m1.powi(n1 as i32) / fact[n1] * (-m2).exp() * m2.powi(n2 as i32) / fact[n2];
                assert_abs_diff_eq!(pnd.get(n1, n2), want, epsilon = 1e-13);
            }
        }
        assert_abs_diff_eq!(pnd.total(), 1.0, epsilon = 1e-9);
        assert_eq!(pnd.get(1000, 0), 0.0);
    }

    #[test]
    fn linear_entropy_extremes() {
        let mixed = AtomDensity { matrix: Matrix4::from_diagonal_element(C64::new(0.25, 0.0)) };
        assert_abs_diff_eq!(linear_entropy(&mixed), 0.75, epsilon = 1e-15);
        let mut pure = Matrix4::zeros();
        pure[(3, 3)] = C64::new(1.0, 0.0);
        assert_abs_diff_eq!(linear_entropy(&AtomDensity { matrix: pure }), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn moment_cap_and_zero_mean() {
        let (amps, w) = coherent_fields(C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        assert!(matches!(field_moment(&amps, &w, 5, 0, 0, 0), Err(Error::ExponentCap { exponent: 5, .. })));
        assert_eq!(mandel_q(&amps, &w, Mode::Mode1), Err(Error::ZeroMeanPhotonNumber));
        assert_eq!(g2_zero(&amps, &w, Mode::Mode1), Err(Error::ZeroMeanPhotonNumber));
    }

    #[test]
    fn middle_branches_share_amplitudes() {
        let cells = (0..25)
            .map(|i| CellAmplitudes {
                a1: C64::new(0.1 * i as f64, 0.2),
                a2: C64::new(0.05, -0.01 * i as f64),
                a4: C64::new(-0.3, 0.1),
            })
            .collect();
        let amps = AmplitudeSet::new(0.0, 4, cells);
        let p = ModelParams::default();
        let trunc = crate::model::FockTruncation { n_max: 4, tail_eps: 1e-12 };
        let rho = atom_density(&amps, &CoherentWeights::new(&p, &trunc));
        assert!(rho.exchange_asymmetry() < 1e-15);
        assert!(rho.hermiticity_error() < 1e-15);
    }

    #[test]
    fn observable_names_round_trip() {
        for name in [
            "pnd(10,10)",
            "mandel_q(mode1)",
            "mandel_q(total)",
            "g2(mode2)",
            "sx(pair)",
            "sp(mode1)",
            "linear_entropy",
            "population(gg)",
            "norm",
        ] {
            let o: Observable = name.parse().unwrap();
            assert_eq!(o.to_string(), name);
        }
        assert_eq!("g2".parse::<Observable>().unwrap(), Observable::G2(Mode::Mode1));
        for bad in ["pnd(1)", "g2(mode3)", "entropy", "sx(pair", "pnd(a,b)"] {
            assert!(bad.parse::<Observable>().is_err(), "{bad}");
        }
    }
}
