use thiserror::Error;

/// Errors raised by the library.
///
/// IPFP non-convergence is not an error: it is reported through
/// [`IpfpResult::converged`](crate::ipfp::IpfpResult::converged).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid p.m.f.: {0}")]
    InvalidPmf(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("degenerate dimension: r = {r}, s = {s} (both must be at least 2)")]
    DegenerateDimension { r: usize, s: usize },

    #[error("zero entry at ({i}, {j}) where strict positivity is required")]
    SingularSupport { i: usize, j: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("feasibility check needs r + s <= 30, got {0}")]
    TooLarge(usize),

    #[error("parameter {theta} outside the domain of {family}")]
    Domain { family: String, theta: f64 },

    #[error("{measure} = {value} is outside the range of the family over its clipped domain")]
    Range { measure: String, value: f64 },

    #[error("root not bracketed: f({lo}) and f({hi}) have the same sign")]
    NoBracket { lo: f64, hi: f64 },

    #[error("gamma is undefined when kappa + delta = 0")]
    UndefinedGamma,

    #[error("degenerate estimator: {0}")]
    DegenerateEstimator(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
