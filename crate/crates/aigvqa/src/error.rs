use std::io;
use std::path::{Path, PathBuf};

use aigvqa_core::assessor::AssessorError;
use aigvqa_core::metrics::MetricError;
use aigvqa_core::pairstudy::PairError;
use aigvqa_core::split::TooFewItems;
use aigvqa_core::subjective::SubjectiveError;
use aigvqa_core::synthgen::SynthError;
use aigvqa_core::taxonomy::TableError;

use crate::store::StoreError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}:{line}: {source}", path.display())]
    Json {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Subjective(#[from] SubjectiveError),
    #[error(transparent)]
    Pair(#[from] PairError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Assessor(#[from] AssessorError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Split(#[from] TooFewItems),
    #[error(transparent)]
    Table(#[from] TableError),
}

impl Error {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn csv(path: impl AsRef<Path>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    /// Process exit status: 3 for I/O failures, 2 for bad or inconsistent
    /// data.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Io { .. } => 3,
            Error::Store(e) if e.is_io() => 3,
            Error::Csv { source, .. } if source.is_io_error() => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
