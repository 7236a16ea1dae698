use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("endpoint error: {0}")]
    Endpoint(String),

    #[error("endpoint does not support {0}")]
    Unsupported(String),

    #[error("endpoint returned no completion tokens for {0}")]
    EmptyCompletion(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("schema error at line {line}: {message}")]
    Line { line: usize, message: String },

    #[error(transparent)]
    Core(#[from] smellprop_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
