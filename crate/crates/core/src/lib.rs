//! Core types and analyses for measuring how readily a language model
//! generates code smells, from token-probability traces.

pub mod align;
pub mod causal;
pub mod diagnostic;
pub mod error;
pub mod infogain;
pub mod psc;
pub mod robustness;
pub mod special;
pub mod trace;

pub use align::{align, in_generated_segment, Coverage, TokenSpan};
pub use diagnostic::{SeverityLabel, SmellDiagnostic};
pub use error::{Error, Result};
pub use psc::{classify, psc_mean, psc_median, psc_relative, ReferenceBounds, SmellSpanScore};
pub use trace::{validate_trace, RawTrace, TokenRecord, TokenTrace};
