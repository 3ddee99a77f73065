use std::path::PathBuf;

/// Errors produced by the captioning library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("line {line}: {message}")]
    Line { line: usize, message: String },

    #[error("unknown entity tag `{0}`")]
    UnknownTag(String),

    #[error("entity position out of range: sentence {sentence_index}, offset {token_offset}: {reason}")]
    EntityPosition {
        sentence_index: usize,
        token_offset: usize,
        reason: String,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate corpus: {0}")]
    Degenerate(String),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("usage: {0}")]
    Usage(String),

    #[error("stage `{stage}` has not been run: run {stage} first")]
    MissingStage { stage: String },

    #[error("configuration of stage `{stage}` changed since its artifacts were built (use --force to rebuild)")]
    ConfigChanged { stage: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error: 1 usage, 2 data, 3 stage dependency.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::MissingStage { .. } | Error::ConfigChanged { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
