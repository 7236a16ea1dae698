//! Snippet corpora and the corpus filter.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use smellprop_core::causal::derive_seed;
use tracing::info;

/// One corpus entry. Fields other than the known ones pass through untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub sample_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_count: Option<usize>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl Sample {
    pub fn new(sample_id: impl Into<String>, source: impl Into<String>) -> Self {
        Self {
            sample_id: sample_id.into(),
            rule_id: None,
            source: Some(source.into()),
            token_count: None,
            extra: Map::new(),
        }
    }

    pub fn source(&self) -> Result<&str> {
        self.source
            .as_deref()
            .with_context(|| format!("sample {} has no source", self.sample_id))
    }
}

pub fn parse_jsonl<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| serde_json::from_str(l).with_context(|| format!("{origin}: line {}", k + 1)))
        .collect()
}

/// Reads a JSONL corpus, a single `.py` file, or a directory of `.py` files
/// (sample id = file stem, sorted by name).
pub fn read_samples(path: &Path) -> Result<Vec<Sample>> {
    if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "py"))
            .collect();
        files.sort();
        return files
            .iter()
            .map(|p| {
                let stem = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                Ok(Sample::new(stem, std::fs::read_to_string(p)?))
            })
            .collect();
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if path.extension().is_some_and(|x| x == "py") {
        let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        return Ok(vec![Sample::new(stem, text)]);
    }
    parse_jsonl(&text, &path.display().to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusFilter {
    pub max_tokens: usize,
    pub per_rule_cap: usize,
    pub seed: u64,
}

impl Default for CorpusFilter {
    fn default() -> Self {
        Self {
            max_tokens: 700,
            per_rule_cap: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FilterReport {
    pub dropped_over_max_tokens: usize,
    /// Rules below the cap, with their instance counts after the length filter.
    pub excluded_rules: BTreeMap<String, usize>,
    /// Rules down-sampled to the cap, with their counts before sampling.
    pub sampled_rules: BTreeMap<String, usize>,
}

/// Drops over-long samples, excludes rules with fewer than `per_rule_cap`
/// instances, and samples exactly `per_rule_cap` from the rest. Kept samples
/// stay in input order.
pub fn filter_corpus(samples: Vec<Sample>, filter: &CorpusFilter) -> Result<(Vec<Sample>, FilterReport)> {
    if filter.max_tokens == 0 || filter.per_rule_cap == 0 {
        bail!("max_tokens and per_rule_cap must be positive");
    }
    let mut report = FilterReport::default();
    let mut by_rule: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (k, s) in samples.iter().enumerate() {
        let (Some(rule), Some(tokens)) = (&s.rule_id, s.token_count) else {
            bail!("sample {} needs rule_id and token_count", s.sample_id);
        };
        if tokens > filter.max_tokens {
            report.dropped_over_max_tokens += 1;
        } else {
            by_rule.entry(rule.clone()).or_default().push(k);
        }
    }

    let mut keep = vec![false; samples.len()];
    for (rule, idx) in &by_rule {
        if idx.len() < filter.per_rule_cap {
            report.excluded_rules.insert(rule.clone(), idx.len());
            continue;
        }
        if idx.len() > filter.per_rule_cap {
            report.sampled_rules.insert(rule.clone(), idx.len());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(filter.seed, &["corpus-filter", rule]));
        for pos in rand::seq::index::sample(&mut rng, idx.len(), filter.per_rule_cap) {
            keep[idx[pos]] = true;
        }
    }
    info!(
        dropped = report.dropped_over_max_tokens,
        excluded = report.excluded_rules.len(),
        "corpus filtered"
    );
    let kept = samples
        .into_iter()
        .zip(keep)
        .filter_map(|(s, k)| k.then_some(s))
        .collect();
    Ok((kept, report))
}
