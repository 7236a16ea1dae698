//! Token-probability traces from completion endpoints.
//!
//! The client speaks the OpenAI-style `/v1/completions` protocol with
//! logprobs. [`stub`] serves the same protocol from a deterministic toy model
//! so whole pipelines can run without a real endpoint.

pub mod client;
pub mod config;
pub mod error;
pub mod stub;
pub mod traces;

pub use client::{prefix_token_count, Client, Completion};
pub use config::{DecodingConfig, EndpointConfig, Strategy, API_KEY_ENV};
pub use error::{Error, Result};
pub use traces::{read_traces, write_traces};
