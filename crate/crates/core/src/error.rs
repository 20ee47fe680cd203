use thiserror::Error;

/// Errors produced by the simulation and verification engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("circulant embedding failed: minimum eigenvalue {min_eigenvalue:.3e} at order {order}")]
    EmbeddingFailure { min_eigenvalue: f64, order: usize },

    #[error("covariance factorization failed at row {row}: pivot {pivot:.3e}")]
    FactorizationFailure { row: usize, pivot: f64 },

    #[error("no threshold solves T*mu(u) = {theta}: largest attainable value is {max_attainable:.6e}")]
    NoSolution { theta: f64, max_attainable: f64 },

    #[error("regime mismatch: experiment needs {expected}, model classified as {found}")]
    RegimeMismatch { expected: String, found: String },

    #[error("estimate infeasible: {0}")]
    Infeasible(String),

    #[error("malformed table: {0}")]
    Table(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
