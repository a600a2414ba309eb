use std::path::PathBuf;

/// Errors raised by the simulator and its diagnostics.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("CFL violation: dt = {dt:e} exceeds the admissible step {admissible:e}")]
    Cfl { dt: f64, admissible: f64 },

    #[error(
        "{solver} did not converge: relative residual {residual:e} after {iterations} iterations"
    )]
    NotConverged {
        solver: &'static str,
        residual: f64,
        iterations: usize,
    },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
