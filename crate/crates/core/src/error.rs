use std::path::PathBuf;

/// Errors raised anywhere in the pipeline.
///
/// The variants are coarse on purpose: callers (the CLI in particular) map
/// them onto exit codes, so each one names a class of failure rather than a
/// call site.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A filter or processing parameter is unusable (cutoff above Nyquist,
    /// order out of range, ...).
    #[error("invalid filter spec: {0}")]
    InvalidSpec(String),

    /// Input data does not satisfy a precondition (too short, non-monotonic
    /// timestamps, unusable RR series, ...).
    #[error("data error: {0}")]
    Data(String),

    /// A caller broke an API contract (rate mismatch, wrong channel count,
    /// feature-name mismatch, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Windowed slicing was asked for a window longer than the signal.
    #[error("signal of {duration_s:.3} s is shorter than one {window_s:.3} s window")]
    EmptySlice { duration_s: f64, window_s: f64 },

    /// Channels of one block disagree on duration by more than one sample.
    #[error("channel alignment error: {0}")]
    Alignment(String),

    /// Manifest or CSV ingestion failure, with file and (when known) line.
    #[error("{}{}: {message}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    Ingest {
        path: PathBuf,
        line: Option<u64>,
        message: String,
    },

    /// Subject split or fold construction failed.
    #[error("split error: {0}")]
    Split(String),

    /// Model training failed on degenerate input.
    #[error("training error: {0}")]
    Training(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Prefixes the message with `ctx`, keeping the variant.
    pub fn context(self, ctx: &str) -> Self {
        match self {
            Error::InvalidSpec(m) => Error::InvalidSpec(format!("{ctx}: {m}")),
            Error::Data(m) => Error::Data(format!("{ctx}: {m}")),
            Error::Contract(m) => Error::Contract(format!("{ctx}: {m}")),
            Error::Alignment(m) => Error::Alignment(format!("{ctx}: {m}")),
            Error::Split(m) => Error::Split(format!("{ctx}: {m}")),
            Error::Training(m) => Error::Training(format!("{ctx}: {m}")),
            Error::EmptySlice { .. } => Error::Data(format!("{ctx}: {self}")),
            other => other,
        }
    }

    pub(crate) fn ingest(
        path: impl Into<PathBuf>,
        line: Option<u64>,
        message: impl Into<String>,
    ) -> Self {
        Error::Ingest {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
