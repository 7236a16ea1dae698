use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("offset error: {0}")]
    Offset(String),
    #[error("reconstruction error: {0}")]
    Reconstruction(String),
    #[error("diagnostic {rule_id} in {sample_id} cannot be aligned: {reason}")]
    Unalignable {
        sample_id: String,
        rule_id: String,
        reason: String,
    },
    #[error("trace {0} has no generated segment")]
    MissingSegment(String),
    #[error("reference bounds cover {available} positions but the span needs {needed}")]
    BoundsMismatch { needed: usize, available: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("singular design matrix: {0}")]
    Singular(String),
    #[error("missing metric column `{0}`")]
    MissingColumn(String),
}
