use std::path::PathBuf;

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("quadrature did not converge: coarse estimate {coarse:e}, refined estimate {refined:e}")]
    Convergence { coarse: f64, refined: f64 },

    #[error("model evaluation failed at theta={theta}, phi={phi}, omega={omega}: {source}")]
    AtNode {
        theta: f64,
        phi: f64,
        omega: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("simulation of design row {row} ({design}) failed: {source}")]
    Simulation {
        row: usize,
        design: String,
        #[source]
        source: Box<Error>,
    },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("{path}: line {line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics rather than of the user's input.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Convergence { .. } | Error::Numeric(_) | Error::Diverged { .. } => true,
            Error::AtNode { source, .. } | Error::Simulation { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
