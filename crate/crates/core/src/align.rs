//! Mapping from a diagnostic's source range to the token span it covers.

use serde::{Deserialize, Serialize};

use crate::diagnostic::SmellDiagnostic;
use crate::error::{Error, Result};
use crate::trace::TokenTrace;

/// Rules whose location is the end of the file rather than a source range.
pub const FILE_TAIL_RULES: &[&str] = &["C0304", "C0305"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coverage {
    Exact,
    Line,
    FileTail,
}

/// Inclusive token span `i..=j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSpan {
    pub i: usize,
    pub j: usize,
    pub coverage: Coverage,
}

impl TokenSpan {
    pub fn len(&self) -> usize {
        self.j - self.i + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.i..=self.j
    }
}

/// Byte offsets of line starts, for 1-based line / 0-based byte column lookup.
#[derive(Debug, Clone)]
pub struct LineIndex {
    starts: Vec<usize>,
    len: usize,
}

impl LineIndex {
    pub fn new(source: &str) -> Self {
        let mut starts = vec![0];
        starts.extend(
            source
                .bytes()
                .enumerate()
                .filter(|&(_, b)| b == b'\n')
                .map(|(k, _)| k + 1),
        );
        // a trailing newline does not open a new line
        if starts.len() > 1 && *starts.last().unwrap() == source.len() {
            starts.pop();
        }
        Self {
            starts,
            len: source.len(),
        }
    }

    pub fn line_count(&self) -> usize {
        if self.len == 0 {
            0
        } else {
            self.starts.len()
        }
    }

    /// Byte range of a 1-based line, including its terminating newline.
    pub fn line_range(&self, line: usize) -> Option<(usize, usize)> {
        if line == 0 || line > self.starts.len() {
            return None;
        }
        let start = self.starts[line - 1];
        let end = self.starts.get(line).copied().unwrap_or(self.len);
        Some((start, end))
    }

    pub fn to_byte(&self, line: usize, col: usize) -> Option<usize> {
        // (last line + 1, 0) is the end-of-file position after a final newline
        if line == self.starts.len() + 1 && col == 0 && self.len > 0 {
            return Some(self.len);
        }
        let (start, end) = self.line_range(line)?;
        Some((start + col).min(end))
    }
}

fn unalignable(diag: &SmellDiagnostic, reason: impl Into<String>) -> Error {
    Error::Unalignable {
        sample_id: diag.sample_id.clone(),
        rule_id: diag.rule_id.clone(),
        reason: reason.into(),
    }
}

/// Smallest contiguous span of spanned tokens intersecting `start..end`.
pub fn cover_bytes(trace: &TokenTrace, start: usize, end: usize) -> Option<(usize, usize)> {
    let mut first = None;
    let mut last = None;
    for (k, tok) in trace.tokens().iter().enumerate() {
        if !tok.is_spanned() {
            continue;
        }
        if tok.byte_start >= end {
            break;
        }
        if tok.byte_end > start {
            first.get_or_insert(k);
            last = Some(k);
        }
    }
    first.zip(last)
}

pub fn align(diag: &SmellDiagnostic, trace: &TokenTrace) -> Result<TokenSpan> {
    if diag.sample_id != trace.sample_id() {
        return Err(unalignable(
            diag,
            format!("trace belongs to sample {}", trace.sample_id()),
        ));
    }

    if FILE_TAIL_RULES.contains(&diag.rule_id.as_str()) {
        let last = trace
            .tokens()
            .iter()
            .rposition(|t| t.is_spanned())
            .ok_or_else(|| unalignable(diag, "trace has no spanned tokens"))?;
        return Ok(TokenSpan {
            i: last,
            j: last,
            coverage: Coverage::FileTail,
        });
    }

    let index = LineIndex::new(trace.source());
    let line_span = |from: usize, to: usize| -> Result<(usize, usize, Coverage)> {
        let (a, _) = index
            .line_range(from)
            .ok_or_else(|| unalignable(diag, format!("line {from} is outside the source")))?;
        let (_, b) = index
            .line_range(to.min(index.starts.len()))
            .ok_or_else(|| unalignable(diag, format!("line {to} is outside the source")))?;
        Ok((a, b, Coverage::Line))
    };

    let (start, end, coverage) = match (diag.end_line, diag.end_col) {
        (None, _) => line_span(diag.start_line, diag.start_line)?,
        (Some(el), None) => line_span(diag.start_line, el)?,
        (Some(el), Some(ec)) => {
            let a = index.to_byte(diag.start_line, diag.start_col).ok_or_else(|| {
                unalignable(diag, format!("line {} is outside the source", diag.start_line))
            })?;
            let b = index
                .to_byte(el, ec)
                .ok_or_else(|| unalignable(diag, format!("line {el} is outside the source")))?;
            if b > a {
                (a, b, Coverage::Exact)
            } else {
                line_span(diag.start_line, diag.start_line)?
            }
        }
    };

    let (i, j) = cover_bytes(trace, start, end)
        .ok_or_else(|| unalignable(diag, format!("no token spans bytes {start}..{end}")))?;
    Ok(TokenSpan { i, j, coverage })
}

/// True iff the span starts at or after the start of the generated segment.
pub fn in_generated_segment(span: &TokenSpan, trace: &TokenTrace) -> Result<bool> {
    let boundary = trace
        .generated_from()
        .ok_or_else(|| Error::MissingSegment(trace.sample_id().to_owned()))?;
    Ok(trace.tokens()[span.i].byte_start >= boundary)
}
