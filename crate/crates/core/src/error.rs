use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e}")]
    QuadratureNonConvergence { estimate: f64, error_bound: f64 },

    #[error("model inconsistency: {0}")]
    ModelInconsistency(String),

    #[error("matrix is not positive semidefinite: pivot {pivot} = {value:e} (jitter {jitter:e})")]
    NotPositiveSemidefinite { pivot: usize, value: f64, jitter: f64 },

    #[error("empty window [{i0}, {i1}] for a path of length {len}")]
    EmptyWindow { i0: usize, i1: usize, len: usize },

    #[error("vacuous bound: {0}")]
    VacuousBound(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
