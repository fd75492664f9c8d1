use thiserror::Error;

/// Errors raised by the geometry, flow and runner layers.
///
/// Every message names the violated invariant or precondition.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unrepresentable profile: {0}")]
    Unrepresentable(String),

    #[error("invalid profile ({invariant}): {detail}")]
    InvalidProfile {
        invariant: &'static str,
        detail: String,
    },

    #[error("mesh error: max chord {chord:.3e} exceeds bound {bound:.3e}")]
    Mesh { chord: f64, bound: f64 },

    #[error("sweep continuity violated: members {a} and {b} are {distance:.3e} apart (bound {bound:.3e})")]
    Continuity {
        a: usize,
        b: usize,
        distance: f64,
        bound: f64,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
