//! Propensity scores over aligned token spans.
//!
//! Three aggregators share the same token probabilities: the arithmetic mean,
//! the median, and a relative score that rescales each probability against
//! empirical per-position bounds taken from a reference batch.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::align::TokenSpan;
use crate::error::{Error, Result};
use crate::trace::TokenTrace;

pub const DEFAULT_LAMBDA: f64 = 0.5;
pub const DEFAULT_EPSILON: f64 = 1e-9;

fn checked_probs(trace: &TokenTrace, span: &TokenSpan) -> Result<Vec<f64>> {
    if span.i > span.j || span.j >= trace.len() {
        return Err(Error::Offset(format!(
            "span ({}, {}) invalid for trace {} with {} tokens",
            span.i,
            span.j,
            trace.sample_id(),
            trace.len()
        )));
    }
    let probs = trace.span_probs(span.i, span.j);
    if probs.is_empty() {
        return Err(Error::Offset(format!(
            "span ({}, {}) of {} holds only zero-width tokens",
            span.i,
            span.j,
            trace.sample_id()
        )));
    }
    Ok(probs)
}

pub fn mean(probs: &[f64]) -> f64 {
    probs.iter().sum::<f64>() / probs.len() as f64
}

/// Median; even-length input averages the two central values.
pub fn median(probs: &[f64]) -> f64 {
    let mut v = probs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn psc_mean(trace: &TokenTrace, span: &TokenSpan) -> Result<f64> {
    checked_probs(trace, span).map(|p| mean(&p))
}

pub fn psc_median(trace: &TokenTrace, span: &TokenSpan) -> Result<f64> {
    checked_probs(trace, span).map(|p| median(&p))
}

pub fn psc_relative(trace: &TokenTrace, span: &TokenSpan, bounds: &ReferenceBounds) -> Result<f64> {
    let probs = checked_probs(trace, span)?;
    relative(&probs, bounds)
}

/// Mean of `(p - p_min) / (p_max - p_min + eps)` over span offsets.
pub fn relative(probs: &[f64], bounds: &ReferenceBounds) -> Result<f64> {
    if bounds.positions.len() < probs.len() {
        return Err(Error::BoundsMismatch {
            needed: probs.len(),
            available: bounds.positions.len(),
        });
    }
    let total: f64 = probs
        .iter()
        .zip(&bounds.positions)
        .map(|(p, (lo, hi))| (p - lo) / (hi - lo + bounds.epsilon))
        .sum();
    Ok(total / probs.len() as f64)
}

/// A score at or above `lambda` is read as propense.
pub fn classify(score: f64, lambda: f64) -> bool {
    score >= lambda
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    Mean,
    #[default]
    Median,
    Relative,
}

impl FromStr for Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Aggregate::Mean),
            "median" => Ok(Aggregate::Median),
            "relative" => Ok(Aggregate::Relative),
            other => Err(Error::Schema(format!("unknown aggregate `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsScope {
    #[default]
    PerSmellTypeBatch,
    GlobalBatch,
}

impl FromStr for BoundsScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_smell_type_batch" | "per-rule" => Ok(BoundsScope::PerSmellTypeBatch),
            "global_batch" | "global" => Ok(BoundsScope::GlobalBatch),
            other => Err(Error::Schema(format!("unknown bounds scope `{other}`"))),
        }
    }
}

impl fmt::Display for BoundsScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundsScope::PerSmellTypeBatch => "per_smell_type_batch",
            BoundsScope::GlobalBatch => "global_batch",
        })
    }
}

/// Per-offset `(p_min, p_max)` pairs for relative scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBounds {
    pub positions: Vec<(f64, f64)>,
    pub epsilon: f64,
    pub scope: BoundsScope,
}

impl ReferenceBounds {
    pub fn new(positions: Vec<(f64, f64)>, epsilon: f64, scope: BoundsScope) -> Result<Self> {
        if let Some((k, _)) = positions.iter().enumerate().find(|(_, (lo, hi))| lo > hi) {
            return Err(Error::Schema(format!("bounds at offset {k} have p_min > p_max")));
        }
        Ok(Self {
            positions,
            epsilon,
            scope,
        })
    }

    /// Offset-wise extremes over every span in `spans`.
    pub fn from_spans<'a>(
        spans: impl IntoIterator<Item = &'a [f64]>,
        epsilon: f64,
        scope: BoundsScope,
    ) -> Self {
        let mut positions: Vec<(f64, f64)> = Vec::new();
        for probs in spans {
            for (k, &p) in probs.iter().enumerate() {
                match positions.get_mut(k) {
                    Some((lo, hi)) => {
                        *lo = lo.min(p);
                        *hi = hi.max(p);
                    }
                    None => positions.push((p, p)),
                }
            }
        }
        Self {
            positions,
            epsilon,
            scope,
        }
    }
}

/// Reference bounds for a whole evaluation batch, keyed by rule id.
#[derive(Debug, Clone)]
pub struct BatchBounds {
    global: ReferenceBounds,
    per_rule: BTreeMap<String, ReferenceBounds>,
    scope: BoundsScope,
}

impl BatchBounds {
    /// `items` are `(rule_id, span probabilities)` pairs from one batch.
    ///
    /// Under per-rule scope, offsets up to the shortest span of a rule use
    /// that rule's extremes and later offsets fall back to the global ones.
    pub fn build(items: &[(String, Vec<f64>)], scope: BoundsScope, epsilon: f64) -> Self {
        let global = ReferenceBounds::from_spans(
            items.iter().map(|(_, p)| p.as_slice()),
            epsilon,
            BoundsScope::GlobalBatch,
        );
        let mut grouped: BTreeMap<&str, Vec<&[f64]>> = BTreeMap::new();
        for (rule, probs) in items {
            grouped.entry(rule).or_default().push(probs);
        }
        let per_rule = grouped
            .into_iter()
            .map(|(rule, spans)| {
                let shortest = spans.iter().map(|s| s.len()).min().unwrap_or(0);
                let mut own = ReferenceBounds::from_spans(
                    spans.iter().copied(),
                    epsilon,
                    BoundsScope::PerSmellTypeBatch,
                );
                for k in shortest..own.positions.len() {
                    own.positions[k] = global.positions[k];
                }
                (rule.to_owned(), own)
            })
            .collect();
        Self {
            global,
            per_rule,
            scope,
        }
    }

    pub fn for_rule(&self, rule_id: &str) -> Option<&ReferenceBounds> {
        match self.scope {
            BoundsScope::GlobalBatch => Some(&self.global),
            BoundsScope::PerSmellTypeBatch => self.per_rule.get(rule_id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmellSpanScore {
    pub sample_id: String,
    pub rule_id: String,
    pub span_i: usize,
    pub span_j: usize,
    pub psc_mean: f64,
    pub psc_median: f64,
    pub psc_relative: f64,
    pub propense: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct ScoreConfig {
    pub lambda: f64,
    pub epsilon: f64,
    pub scope: BoundsScope,
    pub aggregate: Aggregate,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            epsilon: DEFAULT_EPSILON,
            scope: BoundsScope::default(),
            aggregate: Aggregate::default(),
        }
    }
}

/// One aligned smell to be scored.
#[derive(Debug, Clone, Copy)]
pub struct ScoreItem<'a> {
    pub trace: &'a TokenTrace,
    pub rule_id: &'a str,
    pub span: TokenSpan,
}

/// Scores a batch; relative bounds are drawn from the batch itself.
pub fn score_batch(items: &[ScoreItem<'_>], config: &ScoreConfig) -> Result<Vec<SmellSpanScore>> {
    let probs = items
        .iter()
        .map(|it| Ok((it.rule_id.to_owned(), checked_probs(it.trace, &it.span)?)))
        .collect::<Result<Vec<_>>>()?;
    let bounds = BatchBounds::build(&probs, config.scope, config.epsilon);
    items
        .iter()
        .zip(&probs)
        .map(|(it, (rule, p))| {
            let b = bounds
                .for_rule(rule)
                .expect("bounds are built from the same batch");
            let psc_mean = mean(p);
            let psc_median = median(p);
            let psc_relative = relative(p, b)?;
            let selected = match config.aggregate {
                Aggregate::Mean => psc_mean,
                Aggregate::Median => psc_median,
                Aggregate::Relative => psc_relative,
            };
            Ok(SmellSpanScore {
                sample_id: it.trace.sample_id().to_owned(),
                rule_id: rule.clone(),
                span_i: it.span.i,
                span_j: it.span.j,
                psc_mean,
                psc_median,
                psc_relative,
                propense: classify(selected, config.lambda),
            })
        })
        .collect()
}
