//! Python-side tooling: smell detection, linter bridge, semantic-preserving
//! transformations and confounder features.

pub mod bridge;
pub mod error;
pub mod features;
pub mod scope;
pub mod sect;
pub mod smells;
pub mod syntax;

pub use error::{Error, Result};
