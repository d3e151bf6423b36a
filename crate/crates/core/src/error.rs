//! Error type shared by all modules.

use thiserror::Error;

/// Errors surfaced by model construction, solvers and simulators.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Matrix or vector dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An argument is outside its documented domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numeric routine failed to reach its tolerance.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A matrix required to be (semi)definite is not.
    #[error("definiteness error: {0}")]
    Definiteness(String),

    /// A hypothesis required by a closed-form verdict does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The Markov chain has no unique stationary distribution.
    #[error("chain structure error: {0}")]
    Structure(String),

    /// Iterative solver exhausted its iteration budget.
    #[error("no convergence after {iterations} iterations, span {span:e} still above tolerance")]
    NonConvergence { iterations: usize, span: f64 },

    /// A quantity is provably unbounded for the given instance.
    #[error("divergent: {0}")]
    Divergence(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short category token, used by the CLI for one-line error reports.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Domain(_) => "domain",
            Error::Numeric(_) => "numeric",
            Error::Definiteness(_) => "definiteness",
            Error::Precondition(_) => "precondition",
            Error::Structure(_) => "structure",
            Error::NonConvergence { .. } => "non-convergence",
            Error::Divergence(_) => "divergence",
        }
    }
}
