use thiserror::Error;

use crate::optimize::GroundStateResult;

pub type Result<T, E = SbmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SbmError {
    /// An argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid bath, model or run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("degenerate norm {0:e}")]
    DegenerateNorm(f64),

    /// No restart reached the convergence criteria. The best partial result is carried along.
    #[error("no restart converged (best energy {:.12e})", .best.energy)]
    NonConvergence { best: Box<GroundStateResult> },

    #[error("unphysical value: {0}")]
    Unphysical(String),

    #[error("no qualifying feature found: {0}")]
    NotFound(String),

    #[error("collapse infeasible: {0}")]
    CollapseInfeasible(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
