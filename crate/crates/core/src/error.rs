use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad frame file format: {0}")]
    Format(String),
    #[error("missing frame index {0} in sequence directory")]
    FrameGap(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid scene script: {0}")]
    Script(String),
    #[error("frames must be stepped in order: expected frame {expected}, got {got}")]
    Sequencing { expected: usize, got: usize },
    #[error("degenerate region: {0}")]
    DegenerateRegion(String),
    #[error("empty index")]
    EmptyIndex,
    #[error("requested k={k} exceeds index size {size}")]
    KnnSize { k: usize, size: usize },
    #[error("insufficient training data: {0}")]
    InsufficientData(String),
    #[error("invalid size: {0}")]
    Size(String),
    #[error("evaluation protocol violation: {0}")]
    Protocol(String),
    #[error("invalid parameter: {0}")]
    Param(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
