use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown node label `{0}`")]
    UnknownNode(String),

    #[error("node `{node}` assigned conflicting classes `{first}` and `{second}`")]
    ConflictingLabel {
        node: String,
        first: String,
        second: String,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("epoch {epoch}, {phase} iteration {iteration}: {source}")]
    Training {
        epoch: usize,
        phase: &'static str,
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
