use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("duplicate document id {0:?}")]
    DuplicateDocId(String),

    #[error("corpus is empty or contains no indexable terms")]
    EmptyCorpus,

    #[error("missing index file {path}")]
    MissingIndexFile { path: PathBuf },

    #[error("unsupported index format version {found:?} in {path} (expected {expected:?})")]
    IndexVersion {
        path: PathBuf,
        found: String,
        expected: String,
    },

    #[error("checksum mismatch for {path}")]
    Checksum { path: PathBuf },

    #[error("corrupt index segment {path}: {msg}")]
    CorruptSegment { path: PathBuf, msg: String },

    #[error("analyzer configuration differs from the one the index was built with")]
    AnalyzerMismatch,

    #[error("query has no terms known to the collection")]
    EmptyQuery,

    #[error("could not extract a topic from turn {turn_id}")]
    TopicExtraction { turn_id: String },

    #[error("unknown rewrite method {0:?}")]
    UnknownMethod(String),

    #[error("turn {0} has no manual rewrite")]
    MissingManual(String),

    #[error("invalid conversation {conv_id}: {msg}")]
    Conversation { conv_id: String, msg: String },

    #[error("document {0:?} is not in the index")]
    UnknownDoc(String),

    #[error("sidecar returned a malformed response: {0}")]
    SidecarMalformed(String),

    #[error("sidecar did not answer within {0:?}")]
    SidecarTimeout(std::time::Duration),

    #[error("sidecar exited: {0}")]
    SidecarExited(String),

    #[error("run and judgments share no turns")]
    NoSharedTurns,

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
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

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// Wraps an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
