use thiserror::Error;

/// Errors shared across the simulation modules.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A query point fell outside the sampled window.
    #[error("point ({x}, {t}) outside window ({x_max}, {t_max})")]
    OutOfWindow { x: f64, t: f64, x_max: f64, t_max: f64 },

    /// The requested structure is only partially determined inside the
    /// sampled window.
    #[error("window truncation: {0}")]
    Truncated(String),

    /// A second-class particle trajectory is undefined because no sink
    /// fired inside the window.
    #[error("no sink exit occurred inside the window")]
    NoSinkExit,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// A persisted record failed to parse.
    #[error("corrupt record at line {line}: {reason}")]
    CorruptRecord { line: usize, reason: String },

    /// A persisted record parsed but did not match the expected schema.
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
