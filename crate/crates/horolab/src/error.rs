use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data violates a structural invariant (shape, congruence, determinant).
    #[error("validation error: {0}")]
    Validation(String),

    /// A work estimate exceeded the configured limit before any work was done.
    #[error("resource guard: {what} needs {needed:.3e} units, limit is {limit:.3e}")]
    ResourceGuard { what: String, needed: f64, limit: f64 },

    /// An iterative or adaptive procedure stopped before meeting its tolerance.
    #[error("no convergence in {what}: estimate {estimate:.6e}, error {error:.3e}")]
    NonConvergence {
        what: String,
        estimate: f64,
        error: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
