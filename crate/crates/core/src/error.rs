use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative method ran out of budget.
    #[error("convergence error: {what} (bracket [{lo}, {hi}], last iterate {last})")]
    Convergence {
        what: String,
        lo: f64,
        hi: f64,
        last: f64,
    },

    /// The flux equation has no interior solution for the requested target.
    #[error("no solution: target flux {target} outside the attainable range ({lo}, {hi})")]
    NoSolution { target: f64, lo: f64, hi: f64 },

    /// |alpha| = 1/2 is the supremum of the period map and is never attained.
    #[error(
        "boundary flux |alpha| = 1/2: no interior oval solves the flux equation; \
         enable extrapolation to obtain the limiting value"
    )]
    BoundaryFlux,

    /// The operation was called in the wrong regime.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A numerical certificate did not hold.
    #[error("verification failure: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
