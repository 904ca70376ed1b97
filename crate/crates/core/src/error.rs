use alloc::string::String;

/// Errors reported by the model, scheme and calibration routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument is outside the documented domain of an operation.
    #[error("invalid input: {0}")]
    Input(String),
    /// A model or grid parameter violates its invariants.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// The requested time step exceeds the sufficient stability bound.
    #[error("time step {dt} exceeds the CFL bound {bound}")]
    Cfl { dt: f64, bound: f64 },
    /// A non-finite value appeared while sweeping the scheme.
    #[error("non-finite value at time level {i}, population node {j}")]
    NonFinite { i: usize, j: usize },
    /// No calibration candidate satisfies the feasibility filters.
    #[error("no feasible candidate in the search ranges")]
    NoFeasibleCandidate,
}

pub(crate) fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}

pub(crate) fn parameter(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
