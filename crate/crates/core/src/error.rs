use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("{malformed} of {rows} rows are malformed; check the column mapping")]
    TooManyMalformed { malformed: usize, rows: usize },

    #[error("unknown activity code `{0}`")]
    UnknownActivity(String),

    #[error("sample without activity label in a labeled window")]
    MissingLabel,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("sliding buffer holds {have} of {need} samples")]
    NotReady { have: usize, need: usize },

    #[error("schema mismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: String, found: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("model artifact error: {0}")]
    Artifact(String),

    #[error("sink error: {0}")]
    Sink(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
