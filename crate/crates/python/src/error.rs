use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {col}")]
    Parse { line: usize, col: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("no collision-free rename for `{name}` (tried {tried} candidates)")]
    RenameCollision { name: String, tried: usize },

    #[error("harness error: {0}")]
    Harness(String),

    #[error(transparent)]
    Core(#[from] smellprop_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
