//! Two two-level atoms exchanging photons with a two-mode field in a Kerr
//! medium, with Stark shifts and intensity-dependent coupling.
//!
//! The state is expanded in coherent-state photon cells `(n1, n2)`. Each cell
//! evolves through three amplitudes driven by a depressed cubic, solved in
//! closed form by [`solver`]. [`oracle`] integrates the same dynamics
//! numerically, both inside the ansatz and on the full truncated Hilbert
//! space. [`observables`] reduces amplitudes to field and atomic statistics,
//! and [`sweep`] tabulates them over coupling strength or time.

// `!(x < tol)` is deliberate throughout: NaN must fail every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod solver;
pub mod sweep;

pub use num_complex::Complex64 as C64;

pub use error::{Cell, Error, Result};
pub use model::{
    branch_coefficients, choose_truncation, choose_truncation_capped, coherent_weight, BranchCoefficients,
    CoherentWeights, Deformation, FockTruncation, ModelParams, T4Convention,
};
pub use observables::{
    atom_density, field_moment, g2_zero, joint_pnd, linear_entropy, mandel_q, quadrature_squeezing, AtomDensity,
    BranchFields, JointPnd, Mode, Observable, SqueezeTarget,
};
pub use oracle::{
    integrate_full, integrate_full_with, integrate_pre_rwa, integrate_rwa, oracle_amplitudes, step_halving,
    Convergence, DetuningPhase, OracleLevel, Scheme, StepControl, TruncatedState,
};
pub use solver::{amplitudes_at, solve_cubic, AmplitudeSet, CellAmplitudes, CellSolution, ClosedForm, CubicData};
pub use sweep::{
    figure_preset, run_sweep, Engine, Figure, ObservableRecord, Panel, PresetId, SweepSpec, SweepTable, SweepVariable,
};
