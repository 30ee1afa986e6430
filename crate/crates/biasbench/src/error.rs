use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type. `exit_code` groups variants into the CLI's
/// exit-code classes: 2 configuration, 3 missing prerequisite artifact,
/// 4 data or numeric error.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("configuration: {0}")]
    Config(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("missing prerequisite artifact: {0}")]
    MissingArtifact(String),
    #[error("column not found: {0}")]
    ColumnNotFound(String),
    #[error("empty dataset: {0}")]
    EmptyDataset(String),
    #[error("duplicate entry id: {0}")]
    DuplicateId(String),
    #[error("unmapped label: {0}")]
    UnmappedLabel(String),
    #[error("class {class} has {count} members, fewer than {required}")]
    ClassTooSmall {
        class: String,
        count: usize,
        required: usize,
    },
    #[error("class absent: {0}")]
    ClassAbsent(String),
    #[error("empty holdout: fraction {fraction} of {n} entries yields an empty part")]
    EmptyHoldout { fraction: f64, n: usize },
    #[error("empty vocabulary after filtering")]
    EmptyVocabulary,
    #[error("zero tokens in corpus {0}")]
    NoTokens(String),
    #[error("training diverged: non-finite loss at round {round}")]
    Diverged { round: usize },
    #[error("feature width mismatch: model expects {expected}, matrix has {actual}")]
    WidthMismatch { expected: usize, actual: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

impl Error {
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) => 2,
            Error::MissingArtifact(_) => 3,
            _ => 4,
        }
    }

    /// Wrap a file-open failure for a path named by the run configuration.
    pub fn config_file(path: &PathBuf, err: std::io::Error) -> Error {
        Error::Config(format!("cannot read {}: {err}", path.display()))
    }
}
