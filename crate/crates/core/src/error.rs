use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A grid cell `(n1, n2)`: the photon numbers carried by the `|e,e>` branch.
pub type Cell = (usize, usize);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("truncation needs n_max = {needed} to reach the tail tolerance, above the cap {cap}")]
    TruncationCap { needed: usize, cap: usize },

    #[error("degenerate cubic roots (min gap {gap:.3e}){}", fmt_cell(.cell))]
    DegenerateRoots { gap: f64, cell: Option<Cell> },

    #[error("cubic has complex roots (arccos argument {argument:.12}){}", fmt_cell(.cell))]
    ComplexRoots { argument: f64, cell: Option<Cell> },

    #[error("closed form requires lambda > 0")]
    LambdaZero,

    #[error("vanishing coupling V1 or V2{}", fmt_cell(&Some(*.cell)))]
    ZeroCoupling { cell: Cell },

    #[error("integrator norm drift {drift:.3e} exceeds 1e-6{}", fmt_cell(.cell))]
    StepTooLarge { drift: f64, cell: Option<Cell> },

    #[error("population {population:.3e} within two levels of the Fock cap exceeds 1e-8")]
    TruncationLeak { population: f64 },

    #[error("moment exponent {exponent} exceeds cap {cap}")]
    ExponentCap { exponent: usize, cap: usize },

    #[error("mean photon number is zero")]
    ZeroMeanPhotonNumber,

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
}

fn fmt_cell(cell: &Option<Cell>) -> String {
    match cell {
        Some((n1, n2)) => format!(" at cell ({n1}, {n2})"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn at_cell(self, cell: Cell) -> Self {
        match self {
            Error::DegenerateRoots { gap, .. } => Error::DegenerateRoots { gap, cell: Some(cell) },
            Error::ComplexRoots { argument, .. } => Error::ComplexRoots { argument, cell: Some(cell) },
            Error::StepTooLarge { drift, .. } => Error::StepTooLarge { drift, cell: Some(cell) },
            other => other,
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::InvalidParams(_) | Error::InvalidSweep(_) | Error::ExponentCap { .. })
    }
}
