use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("chain validation failed at stage {index}: {reason}")]
    Validation { index: usize, reason: String },

    #[error("stage index {requested} out of range (chain has {available} stages)")]
    Index { requested: usize, available: usize },

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("threshold search failed: {0}")]
    Search(String),

    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("operator Jacobian undefined at the degenerate point P^sym = 0 (delta = 0, p = {p})")]
    DegeneratePoint { p: f64 },

    #[error("Newton did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("conjugate gradient breakdown: {0}")]
    CgBreakdown(String),

    #[error("time step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown check `{0}`")]
    UnknownCheck(String),

    #[error("check `{check}` does not apply: {reason}")]
    Inapplicable { check: String, reason: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
