use thiserror::Error;

/// Errors raised by state construction, amplification and the measures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-physical state: {0}")]
    NonPhysical(String),

    #[error("cutoff n_max = {n_max} leaves tail mass {tail:e} above tolerance; try n_max >= {suggested_n_max}")]
    Truncation {
        n_max: usize,
        tail: f64,
        suggested_n_max: usize,
    },

    #[error("success probability {0:e} underflows")]
    ProbabilityUnderflow(f64),

    #[error("numerical consistency check failed: {0}")]
    NumericalConsistency(String),

    #[error("phase-space grid does not cover the state: total integral {total_integral}")]
    Coverage { total_integral: f64 },

    #[error("quadrature did not converge: last estimate {last:e}, previous {previous:e}")]
    Convergence { last: f64, previous: f64 },

    #[error("required cutoff exceeds the limit of {limit} (needed more than {n_max})")]
    ResourceLimit { n_max: usize, limit: usize },
}

/// Coarse classification used by the command-line driver for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    InvalidInput,
    Convergence,
    Resource,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidInput(_) => ErrorKind::InvalidInput,
            Error::ResourceLimit { .. } | Error::Truncation { .. } => ErrorKind::Resource,
            Error::NonPhysical(_)
            | Error::ProbabilityUnderflow(_)
            | Error::NumericalConsistency(_)
            | Error::Coverage { .. }
            | Error::Convergence { .. } => ErrorKind::Convergence,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
