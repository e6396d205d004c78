use thiserror::Error;

/// Errors raised by the geometry, calculus and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("total weight mismatch: {left} vs {right}")]
    WeightMismatch { left: usize, right: usize },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("tuple size {d} exceeds the enumeration limit {limit}")]
    TooLarge { d: usize, limit: usize },

    #[error("degree overflow: {k1} + {k2} exceeds ambient dimension {dim}")]
    DegreeOverflow { k1: usize, k2: usize, dim: usize },

    #[error("form mismatch: {0}")]
    FormMismatch(String),

    #[error("point {0:?} lies outside the image of the map")]
    OutsideImage(Vec<f64>),

    #[error("root solver failed: {0}")]
    RootSolver(String),

    #[error("fiber over {0:?} meets a critical point; H is singular there")]
    SingularH(Vec<f64>),

    #[error("path continuation step underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not supported: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures of numerical procedures, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RootSolver(_) | Error::SingularH(_) | Error::StepUnderflow { .. } | Error::Numerical(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
