//! Token-probability traces.
//!
//! A trace is one code sample together with the tokens a model produced or
//! scored over it. Offsets are byte offsets into `source`; probabilities are
//! stored as natural-log values and exponentiated on use.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub text: String,
    pub byte_start: usize,
    pub byte_end: usize,
    pub logprob: f64,
}

impl TokenRecord {
    pub fn new(text: impl Into<String>, byte_start: usize, byte_end: usize, logprob: f64) -> Self {
        Self {
            text: text.into(),
            byte_start,
            byte_end,
            logprob,
        }
    }

    pub fn prob(&self) -> f64 {
        self.logprob.exp()
    }

    /// Zero-width tokens are tokenizer specials with no source span.
    pub fn is_spanned(&self) -> bool {
        self.byte_end > self.byte_start
    }
}

/// Unvalidated trace record, exactly as it appears on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTrace {
    pub sample_id: String,
    pub source: String,
    #[serde(default)]
    pub generated_from: Option<usize>,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
    pub tokens: Vec<TokenRecord>,
}

/// A validated trace. Construct with [`validate_trace`] or [`TokenTrace::new`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrace", into = "RawTrace")]
pub struct TokenTrace {
    sample_id: String,
    source: String,
    generated_from: Option<usize>,
    meta: BTreeMap<String, String>,
    tokens: Vec<TokenRecord>,
}

impl TokenTrace {
    pub fn new(
        sample_id: impl Into<String>,
        source: impl Into<String>,
        tokens: Vec<TokenRecord>,
        generated_from: Option<usize>,
        meta: BTreeMap<String, String>,
    ) -> Result<Self> {
        validate_trace(RawTrace {
            sample_id: sample_id.into(),
            source: source.into(),
            generated_from,
            meta,
            tokens,
        })
    }

    /// Builds a trace whose tokens exactly tile `source`, one logprob per piece.
    pub fn from_pieces(
        sample_id: impl Into<String>,
        pieces: &[(&str, f64)],
        generated_from: Option<usize>,
    ) -> Result<Self> {
        let mut source = String::new();
        let mut tokens = Vec::with_capacity(pieces.len());
        for (text, logprob) in pieces {
            let start = source.len();
            source.push_str(text);
            tokens.push(TokenRecord::new(*text, start, source.len(), *logprob));
        }
        Self::new(sample_id, source, tokens, generated_from, BTreeMap::new())
    }

    pub fn sample_id(&self) -> &str {
        &self.sample_id
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn tokens(&self) -> &[TokenRecord] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn generated_from(&self) -> Option<usize> {
        self.generated_from
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    /// Probabilities of tokens `i..=j`, skipping zero-width specials.
    pub fn span_probs(&self, i: usize, j: usize) -> Vec<f64> {
        self.tokens[i..=j]
            .iter()
            .filter(|t| t.is_spanned())
            .map(TokenRecord::prob)
            .collect()
    }

    /// Number of source bytes covered by at least one token.
    pub fn covered_len(&self) -> usize {
        self.tokens.iter().map(|t| t.byte_end - t.byte_start).sum()
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.meta.insert(key.into(), value.into());
        self
    }
}

impl From<TokenTrace> for RawTrace {
    fn from(t: TokenTrace) -> Self {
        RawTrace {
            sample_id: t.sample_id,
            source: t.source,
            generated_from: t.generated_from,
            meta: t.meta,
            tokens: t.tokens,
        }
    }
}

impl TryFrom<RawTrace> for TokenTrace {
    type Error = Error;

    fn try_from(raw: RawTrace) -> Result<Self> {
        validate_trace(raw)
    }
}

/// Checks every trace invariant and returns the validated trace.
pub fn validate_trace(raw: RawTrace) -> Result<TokenTrace> {
    if raw.sample_id.is_empty() {
        return Err(Error::Schema("sample_id is empty".into()));
    }
    let src = raw.source.as_bytes();
    if let Some(g) = raw.generated_from {
        if g > src.len() {
            return Err(Error::Offset(format!(
                "generated_from {g} exceeds source length {}",
                src.len()
            )));
        }
    }

    let mut prev_end = 0usize;
    for (k, tok) in raw.tokens.iter().enumerate() {
        if !tok.logprob.is_finite() || tok.logprob > 0.0 {
            return Err(Error::Schema(format!(
                "token {k}: logprob {} is not a log-probability in (-inf, 0]",
                tok.logprob
            )));
        }
        if tok.byte_start > tok.byte_end {
            return Err(Error::Offset(format!(
                "token {k}: byte_start {} > byte_end {}",
                tok.byte_start, tok.byte_end
            )));
        }
        if tok.byte_end > src.len() {
            return Err(Error::Offset(format!(
                "token {k}: byte_end {} beyond source length {}",
                tok.byte_end,
                src.len()
            )));
        }
        if tok.byte_start < prev_end {
            return Err(Error::Offset(format!(
                "token {k}: span {}..{} overlaps or precedes previous end {prev_end}",
                tok.byte_start, tok.byte_end
            )));
        }
        if tok.is_spanned() {
            if &src[tok.byte_start..tok.byte_end] != tok.text.as_bytes() {
                return Err(Error::Reconstruction(format!(
                    "token {k}: text {:?} does not match source bytes {}..{}",
                    tok.text, tok.byte_start, tok.byte_end
                )));
            }
            prev_end = tok.byte_end;
        } else {
            prev_end = tok.byte_start;
        }
    }

    Ok(TokenTrace {
        sample_id: raw.sample_id,
        source: raw.source,
        generated_from: raw.generated_from,
        meta: raw.meta,
        tokens: raw.tokens,
    })
}
