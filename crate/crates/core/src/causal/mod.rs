//! Backdoor-adjusted treatment effects of generation-pipeline factors on
//! smell propensity, with refutation tests.
//!
//! The adjustment set is the full confounder vector: every outcome is
//! regressed on a treatment indicator plus the standardized confounders, and
//! the indicator's coefficient is the effect estimate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special;

pub mod refute;
pub mod regression;
pub mod synthetic;

pub use refute::{refute, RefutationKind, RefuteConfig, Refutation};

pub const MIN_ROWS_PER_LEVEL: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosTag {
    Noun,
    ProperNoun,
    Verb,
    Adjective,
    Numeral,
    Interjection,
}

impl PosTag {
    pub const ALL: [PosTag; 6] = [
        PosTag::Noun,
        PosTag::ProperNoun,
        PosTag::Verb,
        PosTag::Adjective,
        PosTag::Numeral,
        PosTag::Interjection,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PosTag::Noun => "noun",
            PosTag::ProperNoun => "proper_noun",
            PosTag::Verb => "verb",
            PosTag::Adjective => "adjective",
            PosTag::Numeral => "numeral",
            PosTag::Interjection => "interjection",
        }
    }
}

/// Syntactic and lexical confounders of one snippet.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub loc: usize,
    pub token_count: usize,
    pub ast_nodes: usize,
    pub identifiers: usize,
    pub ast_height: usize,
    pub syntax_errors: usize,
    pub whitespace_count: usize,
    pub word_count: usize,
    pub vocab_size: usize,
    pub pos_counts: BTreeMap<PosTag, usize>,
}

impl FeatureVector {
    pub const SCALAR_NAMES: [&'static str; 9] = [
        "loc",
        "token_count",
        "ast_nodes",
        "identifiers",
        "ast_height",
        "syntax_errors",
        "whitespace_count",
        "word_count",
        "vocab_size",
    ];

    pub fn pos(&self, tag: PosTag) -> usize {
        self.pos_counts.get(&tag).copied().unwrap_or(0)
    }

    pub fn names() -> Vec<String> {
        Self::SCALAR_NAMES
            .iter()
            .map(|s| s.to_string())
            .chain(PosTag::ALL.iter().map(|t| format!("pos_{}", t.as_str())))
            .collect()
    }

    /// Values in the order of [`FeatureVector::names`].
    pub fn values(&self) -> Vec<f64> {
        let scalars = [
            self.loc,
            self.token_count,
            self.ast_nodes,
            self.identifiers,
            self.ast_height,
            self.syntax_errors,
            self.whitespace_count,
            self.word_count,
            self.vocab_size,
        ];
        scalars
            .iter()
            .copied()
            .chain(PosTag::ALL.iter().map(|t| self.pos(*t)))
            .map(|v| v as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    /// Median propensity score.
    #[default]
    Y1,
    /// Relative propensity score.
    Y0,
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "y1" | "Y1" => Ok(Outcome::Y1),
            "y0" | "Y0" => Ok(Outcome::Y0),
            other => Err(Error::Schema(format!("unknown outcome `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRow {
    pub sample_id: String,
    pub rule_id: String,
    pub level: String,
    pub y1: f64,
    pub y0: f64,
    pub covariates: Vec<f64>,
}

impl FrameRow {
    pub fn outcome(&self, which: Outcome) -> f64 {
        match which {
            Outcome::Y1 => self.y1,
            Outcome::Y0 => self.y0,
        }
    }
}

/// Rows for one treatment family (e.g. decoding strategy) with one control level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentFrame {
    pub treatment: String,
    pub control: String,
    pub levels: Vec<String>,
    pub feature_names: Vec<String>,
    pub rows: Vec<FrameRow>,
}

impl ExperimentFrame {
    pub fn validate(&self) -> Result<()> {
        let levels: BTreeSet<&str> = self.levels.iter().map(String::as_str).collect();
        if levels.len() != self.levels.len() {
            return Err(Error::Schema(format!("{}: duplicate levels", self.treatment)));
        }
        if !levels.contains(self.control.as_str()) {
            return Err(Error::Schema(format!(
                "{}: control `{}` is not a declared level",
                self.treatment, self.control
            )));
        }
        for r in &self.rows {
            if !levels.contains(r.level.as_str()) {
                return Err(Error::Schema(format!(
                    "{}: row {} has undeclared level `{}`",
                    self.treatment, r.sample_id, r.level
                )));
            }
            if r.covariates.len() != self.feature_names.len() {
                return Err(Error::Schema(format!(
                    "{}: row {} has {} covariates, expected {}",
                    self.treatment,
                    r.sample_id,
                    r.covariates.len(),
                    self.feature_names.len()
                )));
            }
        }
        Ok(())
    }

    /// Rule ids present in the frame, sorted.
    pub fn rules(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.rows.iter().map(|r| r.rule_id.as_str()).collect();
        set.into_iter().map(str::to_owned).collect()
    }

    pub fn for_rule(&self, rule_id: &str) -> ExperimentFrame {
        ExperimentFrame {
            rows: self
                .rows
                .iter()
                .filter(|r| r.rule_id == rule_id)
                .cloned()
                .collect(),
            ..self.clone_header()
        }
    }

    fn clone_header(&self) -> ExperimentFrame {
        ExperimentFrame {
            treatment: self.treatment.clone(),
            control: self.control.clone(),
            levels: self.levels.clone(),
            feature_names: self.feature_names.clone(),
            rows: Vec::new(),
        }
    }
}

/// The control level each treatment family is compared against.
pub fn default_control(treatment: &str) -> Option<&'static str> {
    match treatment {
        "T1" => Some("greedy"),
        "T2" => Some("S1"),
        "T3" => Some("M1"),
        "T4" => Some("p0_minimal"),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalResult {
    pub rule_id: String,
    pub treatment: String,
    pub treatment_level: String,
    pub control_level: String,
    pub rho: f64,
    pub ate: f64,
    pub se: f64,
    pub ridge: bool,
    pub n_treated: usize,
    pub n_control: usize,
    pub refutations: BTreeMap<RefutationKind, Refutation>,
}

impl CausalResult {
    pub fn p_value(&self) -> f64 {
        if self.se == 0.0 {
            return if self.ate == 0.0 { 1.0 } else { 0.0 };
        }
        special::normal_two_sided_p(self.ate / self.se)
    }

    pub fn significance(&self) -> &'static str {
        match self.p_value() {
            p if p < 0.001 => "***",
            p if p < 0.01 => "**",
            p if p < 0.05 => "*",
            _ => "",
        }
    }

    /// All flagged refutations present and passed.
    pub fn robust(&self) -> bool {
        [
            RefutationKind::RandomCommonCause,
            RefutationKind::Placebo,
            RefutationKind::Subset,
        ]
        .iter()
        .all(|k| {
            self.refutations
                .get(k)
                .and_then(|r| r.passed)
                .unwrap_or(false)
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EstimateConfig {
    pub outcome: Outcome,
    pub min_rows: usize,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            outcome: Outcome::Y1,
            min_rows: MIN_ROWS_PER_LEVEL,
        }
    }
}

/// Design for one treatment-vs-control comparison.
#[derive(Debug, Clone)]
pub(crate) struct Design {
    pub indicator: Vec<f64>,
    pub outcome: Vec<f64>,
    pub confounders: Vec<Vec<f64>>,
    pub n_treated: usize,
    pub n_control: usize,
}

impl Design {
    pub fn build(
        frame: &ExperimentFrame,
        treatment_level: &str,
        control_level: &str,
        outcome: Outcome,
    ) -> Design {
        let rows: Vec<&FrameRow> = frame
            .rows
            .iter()
            .filter(|r| r.level == treatment_level || r.level == control_level)
            .collect();
        let indicator: Vec<f64> = rows
            .iter()
            .map(|r| f64::from(u8::from(r.level == treatment_level)))
            .collect();
        let n_treated = indicator.iter().filter(|&&d| d == 1.0).count();
        let confounders = (0..frame.feature_names.len())
            .map(|c| rows.iter().map(|r| r.covariates[c]).collect())
            .collect();
        Design {
            n_control: rows.len() - n_treated,
            n_treated,
            outcome: rows.iter().map(|r| r.outcome(outcome)).collect(),
            indicator,
            confounders,
        }
    }

    pub fn subset(&self, idx: &[usize]) -> Design {
        let pick = |v: &Vec<f64>| idx.iter().map(|&k| v[k]).collect::<Vec<f64>>();
        let indicator = pick(&self.indicator);
        let n_treated = indicator.iter().filter(|&&d| d == 1.0).count();
        Design {
            n_control: idx.len() - n_treated,
            n_treated,
            outcome: pick(&self.outcome),
            confounders: self.confounders.iter().map(pick).collect(),
            indicator,
        }
    }

    /// `(ate, se, ridge)` from the adjusted regression.
    pub fn fit(&self) -> Result<(f64, f64, bool)> {
        let standardized: Vec<Vec<f64>> = self
            .confounders
            .iter()
            .filter_map(|c| regression::standardize(c))
            .collect();
        let mut cols: Vec<&[f64]> = vec![&self.indicator];
        cols.extend(standardized.iter().map(Vec::as_slice));
        let fit = regression::ols(&self.outcome, &cols)?;
        Ok((fit.coef[1], fit.se[1], fit.ridge))
    }
}

/// Effect of `treatment_level` relative to `control_level` on the outcome.
pub fn estimate_ate(
    frame: &ExperimentFrame,
    treatment_level: &str,
    control_level: &str,
    config: &EstimateConfig,
) -> Result<CausalResult> {
    frame.validate()?;
    let design = Design::build(frame, treatment_level, control_level, config.outcome);
    for (level, n) in [
        (treatment_level, design.n_treated),
        (control_level, design.n_control),
    ] {
        if n < config.min_rows {
            return Err(Error::InsufficientData(format!(
                "{}: level `{level}` has {n} rows, need {}",
                frame.treatment, config.min_rows
            )));
        }
    }
    let (ate, se, ridge) = design.fit()?;
    let rules = frame.rules();
    Ok(CausalResult {
        rule_id: rules.join("+"),
        treatment: frame.treatment.clone(),
        treatment_level: treatment_level.to_owned(),
        control_level: control_level.to_owned(),
        rho: regression::spearman(&design.indicator, &design.outcome),
        ate,
        se,
        ridge,
        n_treated: design.n_treated,
        n_control: design.n_control,
        refutations: BTreeMap::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalReportRow {
    pub rule_id: String,
    pub treatment: String,
    pub level: String,
    pub control: String,
    pub rho: f64,
    pub ate: f64,
    pub se: f64,
    pub p_value: f64,
    pub significance: String,
    pub random_common_cause: Option<bool>,
    pub placebo: Option<bool>,
    pub subset: Option<bool>,
    pub unobserved_shift: Option<f64>,
    pub robust: bool,
}

impl From<&CausalResult> for CausalReportRow {
    fn from(r: &CausalResult) -> Self {
        let passed = |k| r.refutations.get(&k).and_then(|x: &Refutation| x.passed);
        CausalReportRow {
            rule_id: r.rule_id.clone(),
            treatment: r.treatment.clone(),
            level: r.treatment_level.clone(),
            control: r.control_level.clone(),
            rho: r.rho,
            ate: r.ate,
            se: r.se,
            p_value: r.p_value(),
            significance: r.significance().to_owned(),
            random_common_cause: passed(RefutationKind::RandomCommonCause),
            placebo: passed(RefutationKind::Placebo),
            subset: passed(RefutationKind::Subset),
            unobserved_shift: r
                .refutations
                .get(&RefutationKind::UnobservedConfounder)
                .map(|x| x.new_estimate - r.ate),
            robust: r.robust(),
        }
    }
}

/// One report row per (rule, non-control level), with refutations.
///
/// `seed` feeds the refutation generators; each (rule, level) task derives
/// its own stream from it.
pub fn causal_report(
    frames: &[ExperimentFrame],
    config: &EstimateConfig,
    refute_config: &RefuteConfig,
    seed: u64,
) -> Result<Vec<CausalReportRow>> {
    let mut rows = Vec::new();
    for frame in frames {
        frame.validate()?;
        for rule in frame.rules() {
            let sub = frame.for_rule(&rule);
            for level in frame.levels.iter().filter(|l| **l != frame.control) {
                let mut result = estimate_ate(&sub, level, &frame.control, config)?;
                let task_seed = derive_seed(seed, &[&frame.treatment, &rule, level]);
                result.refutations = refute(&sub, &result, config, refute_config, task_seed)?;
                rows.push(CausalReportRow::from(&result));
            }
        }
    }
    Ok(rows)
}

/// Stable per-task seed: FNV-1a over the base seed and task labels.
pub fn derive_seed(seed: u64, labels: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |b: u8| {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    };
    seed.to_le_bytes().into_iter().for_each(&mut eat);
    for l in labels {
        l.bytes().for_each(&mut eat);
        eat(0xff);
    }
    h
}

impl fmt::Display for CausalReportRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}={} rho={:.3} ate={:.4}{}",
            self.rule_id, self.treatment, self.level, self.rho, self.ate, self.significance
        )
    }
}
