use std::path::PathBuf;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate comment id {id:?}")]
    DuplicateComment { line: usize, id: String },

    #[error("line {line}: duplicate annotator {annotator:?} in comment {comment:?}")]
    DuplicateAnnotator {
        line: usize,
        comment: String,
        annotator: String,
    },

    #[error("line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },

    #[error("invalid label value {0} (expected 0..=4)")]
    InvalidLabel(i64),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("empty input")]
    EmptyInput,

    #[error("too few rows: {rows} rows for {folds} folds")]
    TooFewRows { rows: usize, folds: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bad magic {found:?}")]
    BadMagic { found: [u8; 4] },

    #[error("truncated stream at byte offset {offset}: {context}")]
    Truncated { offset: u64, context: &'static str },

    #[error("duplicate embedding id {0:?}")]
    DuplicateEmbedding(String),

    #[error("entry count mismatch: header declares {declared}, stream holds {found}")]
    CountMismatch { declared: u64, found: u64 },

    #[error("ragged vectors: expected dimension {expected}, got {found} for id {id:?}")]
    RaggedVector {
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("id longer than 65535 bytes ({0} bytes)")]
    IdTooLong(usize),

    #[error("ids missing from embedding table: {}", .0.join(", "))]
    MissingIds(Vec<String>),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("training data holds a single class")]
    SingleClass,

    #[error("non-finite feature value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("all class counts are zero")]
    AllZeroCounts,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("value {value} outside the category domain")]
    OutsideDomain { value: u8 },

    #[error("comment id mismatch: {0}")]
    IdMismatch(String),

    #[error("missing target {0:?}")]
    MissingTarget(String),

    #[error("no trained model for annotator {0}")]
    MissingModel(String),

    #[error("no tuned choice for annotator {0}")]
    MissingChoice(String),

    #[error("empty hyperparameter grid")]
    EmptyGrid,

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid model blob: {0}")]
    ModelFormat(String),

    #[error("dataset provenance violation: {0}")]
    Provenance(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn file(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::File { path, source }
    }
}
