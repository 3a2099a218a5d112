use std::io;
use std::path::PathBuf;

use answersel_core::corpus::CorpusError;
use answersel_core::metrics::EvalError;
use answersel_core::model::ModelError;
use answersel_core::textenc::EncodeError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    RawIo(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    Corpus { line: usize, source: CorpusError },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("vocabulary: {0}")]
    Vocab(#[from] EncodeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("numerical abort at step {step}: {message}")]
    Numerical { step: u64, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    /// Process exit code: 1 usage/config, 2 data, 3 numerical abort.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Numerical { .. } => 3,
            Error::Model(ModelError::InvalidConfig(_)) => 1,
            _ => 2,
        }
    }
}
