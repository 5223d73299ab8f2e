use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("no tables found")]
    NoTables,

    #[error("duplicate table `{0}`")]
    DuplicateTable(String),

    #[error("duplicate column `{column}` in table `{table}`")]
    DuplicateColumn { table: String, column: String },

    #[error("foreign key {table}.{column} references unknown {target}")]
    UnresolvedForeignKey {
        table: String,
        column: String,
        target: String,
    },

    #[error("invalid schema `{db_id}`: {message}")]
    InvalidSchema { db_id: String, message: String },

    #[error("catalog record `{db_id}`: {message}")]
    Catalog { db_id: String, message: String },

    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown database `{0}`")]
    UnknownDatabase(String),

    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("zero-norm vector")]
    ZeroNorm,

    #[error("model mismatch: index built with `{index}`, provider is `{provider}`")]
    ModelMismatch { index: String, provider: String },

    #[error("provider error ({}): {message}", if *.retryable { "retryable" } else { "fatal" })]
    Provider { message: String, retryable: bool },

    #[error("response format violation: {0}")]
    Format(String),

    #[error("database `{0}` is not among the candidates")]
    NotACandidate(String),

    #[error("no recording for prompt {prompt_sha256} (model `{model_id}`)")]
    MissingRecording {
        prompt_sha256: String,
        model_id: String,
    },

    #[error("infeasible cluster bounds: {0}")]
    InfeasibleBounds(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }

    /// Whether retrying the same request may succeed.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            Error::Provider {
                retryable: true,
                ..
            }
        )
    }
}
