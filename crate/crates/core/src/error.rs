use thiserror::Error;

/// Errors raised across the solver suite.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (dimension mismatch, bad ids, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// A formula evaluated outside the range where it is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// An enumeration or model would exceed its configured size cap.
    #[error("{what}: {count} exceeds cap {cap}")]
    CapExceeded { what: &'static str, count: u128, cap: u128 },

    /// A time or node limit stopped a solve before it finished.
    #[error("resource limit reached: {0}")]
    Limit(String),

    /// The LP/MILP backend failed in a way that is not a clean status.
    #[error("solver failure: {0}")]
    Solver(String),

    /// Dual-variable caps were found too small and could not be repaired.
    #[error("big-M audit failed: {0}")]
    Audit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
