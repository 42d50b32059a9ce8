use alloc::string::String;

/// Errors raised by the geometry, channel and precoding routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("angle {value} outside the valid span [{min}, {max}]")]
    AngleOutOfSpan { value: f64, min: f64, max: f64 },
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dual search did not converge after {iterations} iterations (chi = {chi:e})")]
    DualNonConvergence { iterations: usize, chi: f64 },
    #[error("codebook entry {index}: {source}")]
    CodebookEntry {
        index: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
    #[error("block diagonalization infeasible for user {user}: null space has {available} dims, need {needed}")]
    BdInfeasible {
        user: usize,
        available: usize,
        needed: usize,
    },
    #[error("outer iteration did not converge in {iterations} iterations (last change {last_change:e} bits/s/Hz)")]
    OuterNonConvergence {
        iterations: usize,
        last_change: f64,
        /// Last iterate, with the full rate trace.
        last: alloc::boxed::Box<crate::mu::SumRateSolution>,
    },
    #[error("codebook has {entries} entries, cannot serve {users} users with distinct entries")]
    CodebookTooSmall { entries: usize, users: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
