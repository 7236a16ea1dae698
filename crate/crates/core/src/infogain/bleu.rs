//! Sentence-level BLEU, used as a reference-similarity baseline.

use std::collections::HashMap;
use std::hash::Hash;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Smoothing {
    None,
    /// Add one to numerator and denominator of every n > 1 precision.
    #[default]
    AddOneHigherOrder,
    /// Add one to every precision, unigrams included.
    AddOneAll,
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram matches and total candidate n-grams.
fn modified_precision<T: Eq + Hash>(candidate: &[T], reference: &[T], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let matches = cand
        .iter()
        .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
        .sum();
    (matches, candidate.len().saturating_sub(n - 1))
}

pub fn brevity_penalty(candidate_len: usize, reference_len: usize) -> f64 {
    if candidate_len == 0 {
        0.0
    } else if candidate_len > reference_len {
        1.0
    } else {
        (1.0 - reference_len as f64 / candidate_len as f64).exp()
    }
}

pub fn bleu<T: Eq + Hash>(candidate: &[T], reference: &[T], max_n: usize, smoothing: Smoothing) -> f64 {
    if candidate.is_empty() || reference.is_empty() || max_n == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let (m, total) = modified_precision(candidate, reference, n);
        let add = match smoothing {
            Smoothing::None => 0,
            Smoothing::AddOneHigherOrder => usize::from(n > 1),
            Smoothing::AddOneAll => 1,
        };
        let (num, den) = (m + add, total + add);
        if num == 0 || den == 0 {
            return 0.0;
        }
        log_sum += (num as f64 / den as f64).ln();
    }
    brevity_penalty(candidate.len(), reference.len()) * (log_sum / max_n as f64).exp()
}

/// Splits code into identifier, number and single-punctuation tokens.
pub fn code_tokens(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (k, c) in text.char_indices() {
        if c.is_alphanumeric() || c == '_' {
            start.get_or_insert(k);
            continue;
        }
        if let Some(s) = start.take() {
            out.push(&text[s..k]);
        }
        if !c.is_whitespace() {
            out.push(&text[k..k + c.len_utf8()]);
        }
    }
    if let Some(s) = start {
        out.push(&text[s..]);
    }
    out
}
