use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("empty point set")]
    EmptyPointSet,

    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),

    #[error("invalid transform: {0}")]
    InvalidTransform(String),

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("incomplete record {sample_id}: missing {metric}")]
    IncompleteRecord { sample_id: String, metric: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("sample {0} has no hypotheses")]
    EmptyHypotheses(String),

    #[error("degenerate correspondences: {0}")]
    DegenerateCorrespondences(String),

    #[error("no overlap: every correspondence was rejected")]
    NoOverlap,

    #[error("no points in box")]
    NoPointsInBox,

    #[error("empty occupancy")]
    EmptyOccupancy,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("sample {sample_id}: field `{field}`: {message}")]
    Manifest {
        sample_id: String,
        field: String,
        message: String,
    },

    #[error("duplicate sample_id {0}")]
    DuplicateSample(String),

    #[error("unknown sample_id {0}")]
    UnknownSample(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{stage} stage: {source}")]
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

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn manifest(
        sample_id: impl Into<String>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Manifest {
            sample_id: sample_id.into(),
            field: field.into(),
            message: message.into(),
        }
    }

    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad inputs or configuration rather than by a
    /// failed computation. The CLI maps these to exit code 1.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Io { .. }
            | Error::Format { .. }
            | Error::Manifest { .. }
            | Error::DuplicateSample(_)
            | Error::UnknownSample(_)
            | Error::Config(_)
            | Error::InvalidThreshold(_)
            | Error::InvalidTransform(_)
            | Error::InvalidBox(_) => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}
