use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    /// A malformed input row. `row` is 1-based over data rows (CSV header excluded).
    #[error("row {row}: {field} {message}")]
    Row {
        row: usize,
        field: String,
        message: String,
    },

    #[error("duplicate project_id `{0}`")]
    DuplicateId(String),

    #[error("unknown format `{0}`")]
    UnknownFormat(String),

    #[error("column map: {0}")]
    ColumnMap(String),

    #[error("lexicon: {0}")]
    Lexicon(String),

    #[error("malformed tree at byte {offset}: {message}")]
    TreeFormat { offset: usize, message: String },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("missing label for `{0}`")]
    MissingLabel(String),

    #[error("label store line {line}: {message}")]
    LabelStore { line: usize, message: String },

    #[error("`{0}` is not queued in this session")]
    NotQueued(String),

    #[error("unknown decision `{0}`")]
    UnknownDecision(String),

    #[error("session: {0}")]
    Session(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
