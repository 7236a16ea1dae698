//! Prompt templates and the paired baseline-vs-instruction experiment.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail, Result};
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use smellprop_core::{align, in_generated_segment, psc_median, TokenTrace};
use smellprop_inference::{Client, DecodingConfig};
use smellprop_python::smells::{self, RuleSet};
use tracing::warn;

use crate::plot::{boxplot_svg, BoxStats, Panel};

pub const SNIPPET: &str = "{snippet}";
pub const AVOID_LIST: &str = "{avoid_list}";
pub const DEFAULT_AVOID: [&str; 3] = ["W0719", "C0304", "W0611"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptId {
    P0Minimal,
    P1Generic,
    P2Role,
    P3Structured,
}

impl PromptId {
    pub const ALL: [PromptId; 4] = [PromptId::P0Minimal, PromptId::P1Generic, PromptId::P2Role, PromptId::P3Structured];

    pub fn as_str(&self) -> &'static str {
        match self {
            PromptId::P0Minimal => "p0_minimal",
            PromptId::P1Generic => "p1_generic",
            PromptId::P2Role => "p2_role",
            PromptId::P3Structured => "p3_structured",
        }
    }
}

impl fmt::Display for PromptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptId {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        PromptId::ALL
            .into_iter()
            .find(|p| p.as_str() == norm || p.as_str().split('_').next() == Some(norm.as_str()))
            .ok_or_else(|| anyhow!("unknown prompt template `{s}` (expected p0_minimal, p1_generic, p2_role or p3_structured)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: PromptId,
    pub template: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avoid_list: Option<Vec<String>>,
}

impl PromptTemplate {
    /// The versioned wording of each template.
    pub fn builtin(id: PromptId) -> Self {
        let (template, avoid_list) = match id {
            PromptId::P0Minimal => (SNIPPET.to_owned(), None),
            PromptId::P1Generic => (format!("Complete the following code\n{SNIPPET}"), None),
            PromptId::P2Role => (
                format!(
                    "You are an expert software engineer committed to producing clean, readable and \
                     maintainable code.\nComplete the following code\n{SNIPPET}"
                ),
                None,
            ),
            PromptId::P3Structured => (
                format!(
                    "You are an expert software engineer committed to producing clean, readable and \
                     maintainable code.\nAvoid the following code smells in your completion:\n{AVOID_LIST}\n\
                     Complete the following code\n{SNIPPET}"
                ),
                Some(DEFAULT_AVOID.iter().map(|s| s.to_string()).collect()),
            ),
        };
        Self { id, template, avoid_list }
    }

    pub fn with_avoid_list(mut self, rules: Vec<String>) -> Self {
        self.avoid_list = Some(rules);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.template.matches(SNIPPET).count();
        if n != 1 {
            bail!("template {} has {n} {SNIPPET} placeholders, expected exactly one", self.id);
        }
        Ok(())
    }

    pub fn render(&self, snippet: &str) -> Result<String> {
        self.validate()?;
        if snippet.is_empty() {
            bail!("cannot render {} for an empty snippet", self.id);
        }
        let bullets = self
            .avoid_list
            .iter()
            .flatten()
            .map(|r| match smells::symbol(r) {
                Some(sym) => format!("- {sym} ({r})"),
                None => format!("- {r}"),
            })
            .collect::<Vec<_>>()
            .join("\n");
        Ok(self.template.replace(AVOID_LIST, &bullets).replace(SNIPPET, snippet))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct MitigationSample {
    pub sample_id: String,
    pub rule_id: String,
    pub source: String,
}

#[derive(Debug, Clone)]
pub struct MitigationConfig {
    pub baseline: PromptTemplate,
    pub treatment: PromptTemplate,
    pub decoding: DecodingConfig,
    pub cut_fraction: f64,
    pub lambda: f64,
    /// Samples processed concurrently.
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRow {
    pub sample_id: String,
    pub rule_id: String,
    pub condition: String,
    pub psc_median: f64,
    pub propense: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Incomplete {
    pub sample_id: String,
    pub rule_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleSummary {
    pub rule_id: String,
    pub pairs: usize,
    pub baseline_median: f64,
    pub treatment_median: f64,
    /// Baseline median minus treatment median.
    pub median_gap: f64,
    pub baseline_below_lambda: f64,
    pub treatment_below_lambda: f64,
    pub baseline_box: BoxStats,
    pub treatment_box: BoxStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MitigationOutcome {
    pub baseline: String,
    pub treatment: String,
    pub lambda: f64,
    pub rows: Vec<PairedRow>,
    pub incomplete: Vec<Incomplete>,
    pub summary: Vec<RuleSummary>,
}

/// Median score of the first `rule_id` smell inside the generated segment,
/// or `None` when the completion does not contain it.
pub fn score_completion(trace: &TokenTrace, rule_id: &str) -> Result<Option<f64>> {
    let diags = smells::detect(trace.sample_id(), trace.source(), &RuleSet::default());
    for d in diags.iter().filter(|d| d.rule_id == rule_id) {
        let span = align(d, trace)?;
        if in_generated_segment(&span, trace)? {
            return Ok(Some(psc_median(trace, &span)?));
        }
    }
    Ok(None)
}

async fn run_one(client: &Client, sample: &MitigationSample, config: &MitigationConfig) -> Result<[Option<f64>; 2]> {
    let (prefix, _) = client.prefix(&sample.source, config.cut_fraction).await?;
    let mut scores = [None, None];
    // both conditions for one sample go out sequentially
    for (k, template) in [&config.baseline, &config.treatment].into_iter().enumerate() {
        let prompt = template.render(&prefix)?;
        let trace = client
            .complete(&sample.sample_id, &prompt, &prefix, &config.decoding)
            .await?
            .with_meta("prompt", template.id.as_str());
        scores[k] = score_completion(&trace, &sample.rule_id)?;
    }
    Ok(scores)
}

pub fn fraction_below(values: &[f64], lambda: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|v| **v < lambda).count() as f64 / values.len() as f64
}

pub fn summarize(rows: &[PairedRow], baseline: &str, treatment: &str, lambda: f64) -> Vec<RuleSummary> {
    let mut groups: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in rows {
        let g = groups.entry(&r.rule_id).or_default();
        if r.condition == baseline {
            g.0.push(r.psc_median);
        } else if r.condition == treatment {
            g.1.push(r.psc_median);
        }
    }
    groups
        .into_iter()
        .filter_map(|(rule, (b, t))| {
            let (bb, tb) = (BoxStats::new(&b)?, BoxStats::new(&t)?);
            Some(RuleSummary {
                rule_id: rule.to_owned(),
                pairs: b.len().min(t.len()),
                baseline_median: bb.median,
                treatment_median: tb.median,
                median_gap: bb.median - tb.median,
                baseline_below_lambda: fraction_below(&b, lambda),
                treatment_below_lambda: fraction_below(&t, lambda),
                baseline_box: bb,
                treatment_box: tb,
            })
        })
        .collect()
}

/// Runs every sample under both prompts. Samples whose completions lack the
/// target smell under either prompt, or that fail, are reported as incomplete
/// rather than aborting the run.
pub async fn run_mitigation(
    client: &Client,
    samples: &[MitigationSample],
    config: &MitigationConfig,
) -> Result<MitigationOutcome> {
    config.baseline.validate()?;
    config.treatment.validate()?;
    config.decoding.validate()?;
    let results: Vec<Result<[Option<f64>; 2]>> = stream::iter(samples)
        .map(|s| run_one(client, s, config))
        .buffered(config.jobs.max(1))
        .collect()
        .await;

    let (b_id, t_id) = (config.baseline.id.as_str(), config.treatment.id.as_str());
    let mut rows = Vec::new();
    let mut incomplete = Vec::new();
    for (s, r) in samples.iter().zip(results) {
        let reason = match r {
            Ok([Some(b), Some(t)]) => {
                for (cond, v) in [(b_id, b), (t_id, t)] {
                    rows.push(PairedRow {
                        sample_id: s.sample_id.clone(),
                        rule_id: s.rule_id.clone(),
                        condition: cond.to_owned(),
                        psc_median: v,
                        propense: smellprop_core::classify(v, config.lambda),
                    });
                }
                continue;
            }
            Ok([b, t]) => format!(
                "target smell absent from the completion under {}",
                match (b, t) {
                    (None, None) => "both prompts",
                    (None, _) => b_id,
                    _ => t_id,
                }
            ),
            Err(e) => format!("{e:#}"),
        };
        warn!(sample = s.sample_id, reason, "unpaired mitigation sample");
        incomplete.push(Incomplete {
            sample_id: s.sample_id.clone(),
            rule_id: s.rule_id.clone(),
            reason,
        });
    }
    let summary = summarize(&rows, b_id, t_id, config.lambda);
    Ok(MitigationOutcome {
        baseline: b_id.to_owned(),
        treatment: t_id.to_owned(),
        lambda: config.lambda,
        rows,
        incomplete,
        summary,
    })
}

pub fn mitigation_svg(outcome: &MitigationOutcome) -> String {
    let panels: Vec<Panel<'_>> = outcome
        .summary
        .iter()
        .map(|s| Panel {
            title: &s.rule_id,
            boxes: vec![
                (outcome.baseline.as_str(), Some(s.baseline_box.clone())),
                (outcome.treatment.as_str(), Some(s.treatment_box.clone())),
            ],
        })
        .collect();
    boxplot_svg("Median propensity by prompt", &panels, Some(outcome.lambda))
}
