//! Closed-form solution of the post-RWA amplitude equations.
//!
//! Each cell `(n1, n2)` couples the three amplitudes `A1(n1, n2)`,
//! `A2(n1+1, n2+1) = A3(n1+1, n2+1)` and `A4(n1+2, n2+2)`. Substituting
//! `C4 = exp(i m t)` yields a real cubic in `m`; its three roots and the
//! weights `a_k` fixed by the initial atomic state give every amplitude at any
//! time.
//!
//! Amplitudes are reported without re-phasing:
//!
//! ```text
//! A1 = 1/(l^2 V1 V2) sum_k a_k (2 m_k^2 - 2 b m_k - l^2 V2^2) e^{i[(m_k - 2 eps - T4) t - 2 phi]}
//! A2 = -1/(l V2)     sum_k a_k m_k                           e^{i[(m_k - eps - T4) t - phi]}
//! A4 =               sum_k a_k                               e^{i (m_k - T4) t}
//! ```
//!
//! The `A1` numerator is the one consistent with both the cubic and the `a_k`
//! expression; at `t = 0` it returns `(gamma1, gamma2, gamma4)` exactly for any
//! `phi`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{branch_coefficients, BranchCoefficients, CoherentWeights, FockTruncation, ModelParams};

/// Relative root-gap threshold below which the cubic counts as degenerate.
pub const ROOT_SEP_TOL: f64 = 1e-8;

/// How far outside `[-1, 1]` the arccos argument may stray before the roots
/// are declared complex.
pub const ACOS_CLAMP_TOL: f64 = 1e-9;

/// Cubic data of one cell: `m^3 + k1 m^2 + k2 m + k3 = 0` with
/// `a = eps - (T1 - T2)`, `b = eps - (T2 - T4)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicData {
    pub a: f64,
    pub b: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    /// Ascending.
    pub roots: [f64; 3],
}

impl CubicData {
    /// `(sum + k1, pairwise - k2, product + k3)`, each divided by the
    /// matching power of `max(1, |root|)`.
    pub fn vieta_residuals(&self) -> [f64; 3] {
        let [m1, m2, m3] = self.roots;
        let s = self.roots.iter().fold(1.0f64, |acc, m| acc.max(m.abs()));
        [
            (m1 + m2 + m3 + self.k1).abs() / s,
            (m1 * m2 + m1 * m3 + m2 * m3 - self.k2).abs() / (s * s),
            (m1 * m2 * m3 + self.k3).abs() / (s * s * s),
        ]
    }
}

/// Three real roots of the monic cubic `m^3 + k1 m^2 + k2 m + k3` by the
/// trigonometric formula, each refined by one Newton step, sorted ascending.
pub fn solve_cubic(k1: f64, k2: f64, k3: f64) -> Result<[f64; 3]> {
    let scale = k1.abs().max(k2.abs().sqrt()).max(k3.abs().cbrt());
    if scale == 0.0 {
        return Err(Error::DegenerateRoots { gap: 0.0, cell: None });
    }
    let disc = k1 * k1 - 3.0 * k2;
    if disc <= 0.0 {
        // sum_{i<j} (m_i - m_j)^2 = 2 disc, so real roots need disc >= 0 and
        // disc = 0 means a triple root.
        if disc < -(ACOS_CLAMP_TOL * scale * scale) {
            return Err(Error::ComplexRoots { argument: f64::NAN, cell: None });
        }
        return Err(Error::DegenerateRoots { gap: disc.max(0.0).sqrt(), cell: None });
    }
    let sqrt_disc = disc.sqrt();
    let mut arg = (9.0 * k1 * k2 - 2.0 * k1 * k1 * k1 - 27.0 * k3) / (2.0 * disc * sqrt_disc);
    if arg.abs() > 1.0 {
        if arg.abs() - 1.0 > ACOS_CLAMP_TOL {
            return Err(Error::ComplexRoots { argument: arg, cell: None });
        }
        arg = arg.clamp(-1.0, 1.0);
    }
    let phase = arg.acos() / 3.0;
    let mut roots = [0.0; 3];
    for (j, root) in roots.iter_mut().enumerate() {
        let m = -k1 / 3.0 + 2.0 / 3.0 * sqrt_disc * (phase + 2.0 * PI * j as f64 / 3.0).cos();
        *root = newton_polish(m, k1, k2, k3);
    }
    roots.sort_by(f64::total_cmp);

    let gap = (roots[1] - roots[0]).min(roots[2] - roots[1]);
    if gap < ROOT_SEP_TOL * scale {
        return Err(Error::DegenerateRoots { gap, cell: None });
    }
    Ok(roots)
}

fn newton_polish(m: f64, k1: f64, k2: f64, k3: f64) -> f64 {
    let poly = |m: f64| ((m + k1) * m + k2) * m + k3;
    let dp = (3.0 * m + 2.0 * k1) * m + k2;
    let p = poly(m);
    let next = m - p / dp;
    // Near a double root the derivative vanishes and the step is noise.
    if next.is_finite() && poly(next).abs() < p.abs() {
        next
    } else {
        m
    }
}

pub fn cubic_data(params: &ModelParams, bc: &BranchCoefficients) -> Result<CubicData> {
    let a = params.epsilon - (bc.t1 - bc.t2);
    let b = params.epsilon - (bc.t2 - bc.t4);
    let l2 = params.lambda * params.lambda;
    let k1 = -(a + 2.0 * b);
    let k2 = b * (a + b) - 0.5 * l2 * (bc.v1 * bc.v1 + bc.v2 * bc.v2);
    let k3 = 0.5 * l2 * (a + b) * bc.v2 * bc.v2;
    let roots = solve_cubic(k1, k2, k3)?;
    Ok(CubicData { a, b, k1, k2, k3, roots })
}

/// Coefficients `a_k` of `C4(t) = sum_k a_k exp(i m_k t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchWeights {
    pub a: [C64; 3],
}

pub fn branch_weights(cubic: &CubicData, params: &ModelParams, bc: &BranchCoefficients) -> Result<BranchWeights> {
    let lam = params.lambda;
    let m = cubic.roots;
    let e1 = C64::from_polar(1.0, params.phi);
    let e2 = e1 * e1;
    let [g1, g2, _, g4] = params.gamma;
    let scale = m.iter().fold(0.0f64, |acc, r| acc.max(r.abs())).max(f64::MIN_POSITIVE);

    let mut a = [C64::new(0.0, 0.0); 3];
    for k in 0..3 {
        let (p, q) = match k {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let gap_p = m[k] - m[p];
        let gap_q = m[k] - m[q];
        let gap = gap_p.abs().min(gap_q.abs());
        if gap < ROOT_SEP_TOL * scale {
            return Err(Error::DegenerateRoots { gap, cell: Some((bc.n1, bc.n2)) });
        }
        let numerator = 0.5 * lam * lam * bc.v1 * bc.v2 * e2 * g1
            + lam * bc.v2 * (-cubic.b + m[p] + m[q]) * e1 * g2
            + (0.5 * lam * lam * bc.v2 * bc.v2 + m[p] * m[q]) * g4;
        a[k] = numerator / (gap_p * gap_q);
    }
    Ok(BranchWeights { a })
}

/// Closed-form data of a single cell, independent of time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellSolution {
    pub coefficients: BranchCoefficients,
    pub cubic: CubicData,
    pub weights: BranchWeights,
}

impl CellSolution {
    pub fn new(params: &ModelParams, n1: usize, n2: usize) -> Result<Self> {
        if params.lambda <= 0.0 {
            return Err(Error::LambdaZero);
        }
        let coefficients = branch_coefficients(params, n1, n2);
        if coefficients.v1 == 0.0 || coefficients.v2 == 0.0 {
            return Err(Error::ZeroCoupling { cell: (n1, n2) });
        }
        let cubic = cubic_data(params, &coefficients).map_err(|e| e.at_cell((n1, n2)))?;
        let weights = branch_weights(&cubic, params, &coefficients)?;
        Ok(CellSolution { coefficients, cubic, weights })
    }

    /// Slowly varying amplitudes `(C1, C2, C4)` at time `t`.
    pub fn slow_amplitudes(&self, params: &ModelParams, t: f64) -> [C64; 3] {
        let BranchCoefficients { v1, v2, .. } = self.coefficients;
        let CubicData { a, b, roots, .. } = self.cubic;
        let lam = params.lambda;
        let phi = params.phi;
        let (mut c1, mut c2, mut c4) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for (&ak, &m) in self.weights.a.iter().zip(roots.iter()) {
            let first = 2.0 * m * (m - b) - lam * lam * v2 * v2;
            c1 += ak * first * C64::from_polar(1.0, (m - a - b) * t - 2.0 * phi);
            c2 += ak * m * C64::from_polar(1.0, (m - b) * t - phi);
            c4 += ak * C64::from_polar(1.0, m * t);
        }
        [c1 / (lam * lam * v1 * v2), -c2 / (lam * v2), c4]
    }

    /// `(A1, A2, A4)` at time `t`, phased exactly as the closed-form
    /// expressions give them.
    pub fn amplitudes(&self, params: &ModelParams, t: f64) -> CellAmplitudes {
        let BranchCoefficients { v1, v2, t4, .. } = self.coefficients;
        let CubicData { b, roots, .. } = self.cubic;
        let lam = params.lambda;
        let (eps, phi) = (params.epsilon, params.phi);
        let (mut a1, mut a2, mut a4) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for (&ak, &m) in self.weights.a.iter().zip(roots.iter()) {
            let first = 2.0 * m * (m - b) - lam * lam * v2 * v2;
            a1 += ak * first * C64::from_polar(1.0, (m - 2.0 * eps - t4) * t - 2.0 * phi);
            a2 += ak * m * C64::from_polar(1.0, (m - eps - t4) * t - phi);
            a4 += ak * C64::from_polar(1.0, (m - t4) * t);
        }
        CellAmplitudes { a1: a1 / (lam * lam * v1 * v2), a2: -a2 / (lam * v2), a4 }
    }
}

/// `A1(n1, n2)`, `A2(n1+1, n2+1)` (equal to `A3`), `A4(n1+2, n2+2)` of one cell.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CellAmplitudes {
    pub a1: C64,
    pub a2: C64,
    pub a4: C64,
}

impl CellAmplitudes {
    pub fn norm_sqr(&self) -> f64 {
        self.a1.norm_sqr() + 2.0 * self.a2.norm_sqr() + self.a4.norm_sqr()
    }

    pub fn max_deviation(&self, other: &CellAmplitudes) -> f64 {
        (self.a1 - other.a1).norm().max((self.a2 - other.a2).norm()).max((self.a4 - other.a4).norm())
    }
}

/// Amplitudes of every cell of the truncated grid at one time, row-major in
/// `(n1, n2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeSet {
    pub t: f64,
    pub n_max: usize,
    pub cells: Vec<CellAmplitudes>,
}

impl AmplitudeSet {
    pub fn new(t: f64, n_max: usize, cells: Vec<CellAmplitudes>) -> Self {
        assert_eq!(cells.len(), (n_max + 1) * (n_max + 1), "cell count does not match n_max");
        AmplitudeSet { t, n_max, cells }
    }

    pub fn get(&self, n1: usize, n2: usize) -> &CellAmplitudes {
        &self.cells[n1 * (self.n_max + 1) + n2]
    }

    pub fn iter_cells(&self) -> impl Iterator<Item = ((usize, usize), &CellAmplitudes)> {
        let side = self.n_max + 1;
        self.cells.iter().enumerate().map(move |(i, c)| ((i / side, i % side), c))
    }

    /// `sum |q_n1|^2 |q_n2|^2 (|A1|^2 + 2|A2|^2 + |A4|^2)`.
    pub fn norm(&self, weights: &CoherentWeights) -> f64 {
        self.iter_cells()
            .map(|((n1, n2), c)| weights.mode1[n1].norm_sqr() * weights.mode2[n2].norm_sqr() * c.norm_sqr())
            .sum()
    }

    /// Largest per-cell deviation over all three amplitudes.
    pub fn max_deviation(&self, other: &AmplitudeSet) -> f64 {
        assert_eq!(self.n_max, other.n_max);
        self.cells.iter().zip(&other.cells).map(|(a, b)| a.max_deviation(b)).fold(0.0, f64::max)
    }

    /// Same as [`max_deviation`](Self::max_deviation) with each cell scaled
    /// by `|q_n1 q_n2|`, i.e. the deviation of the state-vector components.
    pub fn max_weighted_deviation(&self, other: &AmplitudeSet, weights: &CoherentWeights) -> f64 {
        self.iter_cells()
            .zip(&other.cells)
            .map(|(((n1, n2), a), b)| (weights.mode1[n1] * weights.mode2[n2]).norm() * a.max_deviation(b))
            .fold(0.0, f64::max)
    }
}

/// Time-independent closed-form data for every cell of a truncated grid.
#[derive(Clone, Debug)]
pub struct ClosedForm {
    pub params: ModelParams,
    pub trunc: FockTruncation,
    pub cells: Vec<CellSolution>,
}

impl ClosedForm {
    pub fn new(params: &ModelParams, trunc: &FockTruncation) -> Result<Self> {
        params.validate()?;
        params.check_truncation(trunc)?;
        if params.lambda <= 0.0 {
            return Err(Error::LambdaZero);
        }
        let side = trunc.cells_per_mode();
        let cells = (0..side * side)
            .into_par_iter()
            .map(|i| CellSolution::new(params, i / side, i % side))
            .collect::<Result<Vec<_>>>()?;
        Ok(ClosedForm { params: params.clone(), trunc: *trunc, cells })
    }

    pub fn cell(&self, n1: usize, n2: usize) -> &CellSolution {
        &self.cells[n1 * self.trunc.cells_per_mode() + n2]
    }

    pub fn at(&self, t: f64) -> AmplitudeSet {
        let cells = self.cells.iter().map(|c| c.amplitudes(&self.params, t)).collect();
        AmplitudeSet::new(t, self.trunc.n_max, cells)
    }
}

/// Closed-form amplitudes on the whole grid at time `t`.
pub fn amplitudes_at(params: &ModelParams, trunc: &FockTruncation, t: f64) -> Result<AmplitudeSet> {
    Ok(ClosedForm::new(params, trunc)?.at(t))
}
