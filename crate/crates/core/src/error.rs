use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick exit codes and HTTP statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: malformed files, unknown names, out-of-domain parameters.
    Input,
    /// The model is undefined for the given inputs (e.g. zero total impact).
    Degenerate,
    /// An internal invariant did not hold.
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid package name {raw:?}: {reason}")]
    InvalidName { raw: String, reason: &'static str },

    #[error("cannot parse requirement {spec:?} at byte {offset}: {reason}")]
    Requirement {
        spec: String,
        offset: usize,
        reason: &'static str,
    },

    #[error("package names collide after normalization as {normalized:?}: {raw_names:?}")]
    NameCollision {
        normalized: String,
        raw_names: Vec<String>,
    },

    #[error("invalid record for {name:?}: {reason}")]
    InvalidRecord { name: String, reason: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unsupported snapshot format {found:?}, expected {expected:?}")]
    Format { found: String, expected: &'static str },

    #[error("unknown package {0:?}")]
    NotFound(String),

    #[error("{0}")]
    Domain(String),

    #[error("scenario {label:?} has zero total impact; normalization is undefined")]
    DegenerateScenario { label: String },

    #[error("threshold {tau} cannot be reached (best achievable share {achievable})")]
    ThresholdUnreachable { tau: f64, achievable: f64 },

    #[error("correlation is undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::DegenerateScenario { .. }
            | Error::ThresholdUnreachable { .. }
            | Error::UndefinedCorrelation(_) => ErrorKind::Degenerate,
            Error::Invariant(_) => ErrorKind::Internal,
            _ => ErrorKind::Input,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
