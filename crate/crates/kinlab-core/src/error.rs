//! Crate-wide error type.
//!
//! One enum covers all failure modes of the numeric layer so that callers
//! can match on the condition rather than on strings. Variants correspond
//! to the documented failure conditions of the public operations.

use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Invalid argument or violated precondition.
    Argument(String),
    /// A non-finite value appeared during evaluation; the payload names where.
    Numeric(String),
    /// An iteration failed to reach its tolerance within its budget.
    Convergence(String),
    /// Requested step size violates a stability constraint.
    /// `admissible` is the largest step the constraint allows.
    StepSize { requested: f64, admissible: f64 },
    /// Problem domain unusable for the requested computation
    /// (e.g. drift not inward at a boundary).
    Domain(String),
    /// Input exceeds a hard size limit of an exact algorithm.
    Size { n: usize, max: usize, hint: String },
    /// Rate schedule does not satisfy the hypotheses of the estimate.
    Schedule(String),
    /// Inner linear solve failed.
    LinearSolve(String),
    /// Leading eigenvalue landed outside its certified window.
    SpectralAnomaly { lambda: f64, tol: f64 },
    /// Continuation sequence shows no Cauchy behaviour.
    Continuation(String),
    /// A closed-form candidate failed its residual validation.
    FormulaValidation { residual: f64, threshold: f64 },
}

impl Error {
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn convergence(msg: impl Into<String>) -> Self {
        Error::Convergence(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl core::fmt::Display for Error {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Error::Argument(m) => write!(f, "invalid argument: {m}"),
            Error::Numeric(m) => write!(f, "non-finite value: {m}"),
            Error::Convergence(m) => write!(f, "no convergence: {m}"),
            Error::StepSize { requested, admissible } => write!(
                f,
                "step size {requested} exceeds stability limit; largest admissible step is {admissible}"
            ),
            Error::Domain(m) => write!(f, "unusable domain: {m}"),
            Error::Size { n, max, hint } => {
                write!(f, "input size {n} exceeds limit {max}; {hint}")
            }
            Error::Schedule(m) => write!(f, "schedule violates hypotheses: {m}"),
            Error::LinearSolve(m) => write!(f, "linear solve failed: {m}"),
            Error::SpectralAnomaly { lambda, tol } => write!(
                f,
                "leading eigenvalue {lambda} differs from 1 by more than {tol}"
            ),
            Error::Continuation(m) => write!(f, "continuation not Cauchy: {m}"),
            Error::FormulaValidation { residual, threshold } => write!(
                f,
                "closed form failed validation: residual {residual} above threshold {threshold}"
            ),
        }
    }
}

impl core::error::Error for Error {}
