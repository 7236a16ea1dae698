//! Severity labelling and information gain of metric scores about severity.
//!
//! Continuous scores are discretized with equal-frequency bins over their
//! ranks, so the gain only depends on the order of the scores. Entropies are
//! in bits.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::align::TokenSpan;
use crate::diagnostic::SeverityLabel;
use crate::error::{Error, Result};
use crate::trace::TokenTrace;

pub mod bleu;

pub const DEFAULT_BINS: usize = 10;

/// Counts smelly tokens (union of spans) and total spanned tokens.
pub fn label_severity(trace: &TokenTrace, spans: &[TokenSpan]) -> (usize, usize, SeverityLabel) {
    let tokens = trace.tokens();
    let smelly: BTreeSet<usize> = spans
        .iter()
        .flat_map(|s| s.indices())
        .filter(|&k| k < tokens.len() && tokens[k].is_spanned())
        .collect();
    let n_t = tokens.iter().filter(|t| t.is_spanned()).count();
    let n_s = smelly.len();
    (n_s, n_t, SeverityLabel::from_counts(n_s, n_t))
}

fn entropy_bits(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.log2()
        })
        .sum()
}

pub fn label_entropy(labels: &[SeverityLabel]) -> f64 {
    let high = labels.iter().filter(|l| **l == SeverityLabel::High).count();
    entropy_bits(&[high, labels.len() - high])
}

/// Equal-frequency bin index per score. Tied scores share the bin of their
/// first sorted position.
pub fn equal_frequency_bins(scores: &[f64], bins: usize) -> Vec<usize> {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut out = vec![0; n];
    let mut first = 0;
    for (pos, &idx) in order.iter().enumerate() {
        if pos > 0 && scores[order[pos - 1]].total_cmp(&scores[idx]).is_ne() {
            first = pos;
        }
        out[idx] = first * bins / n;
    }
    out
}

/// `H(S) - H(S | X)` with X discretized into `bins` equal-frequency bins.
pub fn information_gain(labels: &[SeverityLabel], scores: &[f64], bins: usize) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::Degenerate(format!(
            "{} labels but {} scores",
            labels.len(),
            scores.len()
        )));
    }
    if labels.len() < 2 {
        return Err(Error::Degenerate(format!(
            "information gain needs at least 2 observations, got {}",
            labels.len()
        )));
    }
    if bins == 0 {
        return Err(Error::Degenerate("bins must be positive".into()));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::Degenerate(format!("non-finite score {bad}")));
    }
    let h_s = label_entropy(labels);
    if h_s == 0.0 {
        return Ok(0.0);
    }

    let assignment = equal_frequency_bins(scores, bins);
    let mut per_bin: BTreeMap<usize, [usize; 2]> = BTreeMap::new();
    for (b, l) in assignment.iter().zip(labels) {
        per_bin.entry(*b).or_default()[(*l == SeverityLabel::High) as usize] += 1;
    }
    let n = labels.len() as f64;
    let h_cond: f64 = per_bin
        .values()
        .map(|c| (c[0] + c[1]) as f64 / n * entropy_bits(c))
        .sum();
    Ok((h_s - h_cond).clamp(0.0, h_s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeverityRow {
    pub sample_id: String,
    pub rule_id: String,
    pub n_s: usize,
    pub n_t: usize,
    pub severity: SeverityLabel,
    pub metric_scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeverityDataset {
    pub rows: Vec<SeverityRow>,
}

impl SeverityDataset {
    pub fn validate(&self) -> Result<()> {
        for r in &self.rows {
            if SeverityLabel::from_counts(r.n_s, r.n_t) != r.severity {
                return Err(Error::Schema(format!(
                    "{}/{}: severity {} disagrees with n_s={} n_t={}",
                    r.sample_id, r.rule_id, r.severity, r.n_s, r.n_t
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IgRow {
    pub rule_id: String,
    pub metric: String,
    pub ig_bits: f64,
    pub h_s_bits: f64,
    pub n: usize,
}

/// Information gain of each metric about severity, per rule.
pub fn ig_report(dataset: &SeverityDataset, metrics: &[String], bins: usize) -> Result<Vec<IgRow>> {
    for m in metrics {
        if !dataset.rows.iter().any(|r| r.metric_scores.contains_key(m)) {
            return Err(Error::MissingColumn(m.clone()));
        }
    }
    let mut by_rule: BTreeMap<&str, Vec<&SeverityRow>> = BTreeMap::new();
    for r in &dataset.rows {
        by_rule.entry(&r.rule_id).or_default().push(r);
    }

    let mut out = Vec::new();
    for (rule, rows) in by_rule {
        if rows.len() < 2 {
            warn!(rule, n = rows.len(), "skipping rule group with fewer than 2 rows");
            continue;
        }
        let labels: Vec<SeverityLabel> = rows.iter().map(|r| r.severity).collect();
        let h_s = label_entropy(&labels);
        for m in metrics {
            let scores = rows
                .iter()
                .map(|r| {
                    r.metric_scores.get(m).copied().ok_or_else(|| {
                        Error::MissingColumn(format!("{m} (sample {})", r.sample_id))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            out.push(IgRow {
                rule_id: rule.to_owned(),
                metric: m.clone(),
                ig_bits: information_gain(&labels, &scores, bins)?,
                h_s_bits: h_s,
                n: rows.len(),
            });
        }
    }
    Ok(out)
}
