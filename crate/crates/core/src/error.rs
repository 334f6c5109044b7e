use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    MalformedRow { line: usize, message: String },

    #[error("line {line}: unknown grade token {token:?}")]
    UnknownGrade { line: usize, token: String },

    #[error("line {line}: duplicate enrollment of student {student} in {course} during {semester}")]
    DuplicateEnrollment {
        line: usize,
        student: String,
        semester: String,
        course: String,
    },

    #[error("empty vocabulary: no course meets the enrollment minimum")]
    EmptyVocabulary,

    #[error("semester {0} has no records in the dataset")]
    MissingSemester(String),

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("course {0} is not in the vocabulary")]
    UnknownCourse(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),

    #[error("empty sequence")]
    EmptySequence,

    #[error("label for course {course} is inconsistent with its mask")]
    InconsistentLabel { course: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty training split")]
    EmptyTrainingSplit,

    #[error("no labeled entries to evaluate")]
    NoLabels,

    #[error("invalid recommendation request: {0}")]
    InvalidRequest(String),

    #[error("infeasible synthetic configuration: {0}")]
    InfeasibleSynth(String),

    #[error("bad magic in model file")]
    BadMagic,

    #[error("unsupported model file version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("model file is truncated")]
    Truncated,

    #[error("model file declares dimensions that overflow: {0}")]
    DimOverflow(String),

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    IoPlain(#[from] std::io::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
