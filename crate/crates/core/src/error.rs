//! Error type shared across the library.

use thiserror::Error;

/// Unified error for curve construction, field evaluation, scenes and the solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for {what} (size {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("curve parameter t={t} outside [0, 1]")]
    ParamOutOfRange { t: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Quadrature nodes of two curves (or an evaluation point and a curve)
    /// come closer than the guard distance; the 1/|s-s'| kernel would pollute
    /// the result.
    #[error("near-singular configuration: min distance {min_dist:.3e} m below guard {limit:.3e} m")]
    NearSingular { min_dist: f64, limit: f64 },

    /// |ds/dt| fell below the degeneracy threshold somewhere the length
    /// gradient needs to divide by it.
    #[error("degenerate velocity |s'(t)|={speed:.3e} below {threshold:.3e} at t={t}")]
    DegenerateVelocity { t: f64, speed: f64, threshold: f64 },

    #[error("design vector length {got}, expected {expected}")]
    DesignLengthMismatch { got: usize, expected: usize },

    #[error("scene: {0}")]
    Scene(String),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
