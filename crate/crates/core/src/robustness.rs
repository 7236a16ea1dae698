//! One-way ANOVA over transformation variants, per smell type.
//!
//! Relative scores are logit-transformed before testing; confidence intervals
//! are reported on the untransformed scores.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special;

pub const DEFAULT_CLAMP_DELTA: f64 = 1e-6;
pub const Z_95: f64 = 1.96;
pub const NON_ROBUST_P: f64 = 0.05;
pub const NON_ROBUST_ETA2: f64 = 0.1;

/// `ln(p / (1 - p))` after clamping `p` into `[delta, 1 - delta]`.
pub fn logit(p: f64, clamp_delta: f64) -> f64 {
    let p = p.clamp(clamp_delta, 1.0 - clamp_delta);
    (p / (1.0 - p)).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable {
    pub f_stat: f64,
    pub p_value: f64,
    pub eta_squared: f64,
    pub ss_between: f64,
    pub ss_within: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub group_sizes: Vec<usize>,
}

pub fn one_way_anova<G: AsRef<[f64]>>(groups: &[G]) -> Result<AnovaTable> {
    if groups.len() < 2 {
        return Err(Error::Degenerate(format!(
            "ANOVA needs at least 2 groups, got {}",
            groups.len()
        )));
    }
    if let Some((k, g)) = groups.iter().enumerate().find(|(_, g)| g.as_ref().len() < 2) {
        return Err(Error::Degenerate(format!(
            "group {k} has {} observation(s), need at least 2",
            g.as_ref().len()
        )));
    }

    let sizes: Vec<usize> = groups.iter().map(|g| g.as_ref().len()).collect();
    let means: Vec<f64> = groups
        .iter()
        .map(|g| g.as_ref().iter().sum::<f64>() / g.as_ref().len() as f64)
        .collect();
    let n_total: usize = sizes.iter().sum();
    let grand = groups
        .iter()
        .flat_map(|g| g.as_ref().iter())
        .sum::<f64>()
        / n_total as f64;

    let ss_within: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.as_ref().iter().map(|x| (x - m).powi(2)).sum::<f64>())
        .sum();
    let ss_between = if means.iter().all(|m| *m == means[0]) {
        0.0
    } else {
        sizes
            .iter()
            .zip(&means)
            .map(|(&n, m)| n as f64 * (m - grand).powi(2))
            .sum()
    };

    let df_between = groups.len() - 1;
    let df_within = n_total - groups.len();
    let (f_stat, p_value) = if ss_between == 0.0 {
        (0.0, 1.0)
    } else if ss_within == 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        let f = (ss_between / df_between as f64) / (ss_within / df_within as f64);
        (f, special::f_sf(f, df_between as f64, df_within as f64))
    };
    let total = ss_between + ss_within;
    let eta_squared = if total == 0.0 { 0.0 } else { ss_between / total };

    Ok(AnovaTable {
        f_stat,
        p_value,
        eta_squared,
        ss_between,
        ss_within,
        df_between,
        df_within,
        group_sizes: sizes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    #[default]
    Normal,
    StudentT,
}

/// Mean and 95% half-width of a sample.
pub fn ci95(sample: &[f64]) -> Result<(f64, f64)> {
    ci95_with(sample, CiMethod::Normal)
}

pub fn ci95_with(sample: &[f64], method: CiMethod) -> Result<(f64, f64)> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "confidence interval needs n >= 2, got {n}"
        )));
    }
    let mean = sample.iter().sum::<f64>() / n as f64;
    let var = sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let crit = match method {
        CiMethod::Normal => Z_95,
        CiMethod::StudentT => special::t_quantile(0.975, (n - 1) as f64),
    };
    Ok((mean, crit * var.sqrt() / (n as f64).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub rule_id: String,
    pub f_stat: f64,
    pub p_value: f64,
    pub eta_squared: f64,
    pub ci95: (f64, f64),
    pub group_sizes: Vec<usize>,
    pub variants: Vec<String>,
    pub ss_between: f64,
    pub ss_within: f64,
}

impl AnovaResult {
    /// Robust unless both significant and a non-trivial effect.
    pub fn robust(&self) -> bool {
        !(self.p_value < NON_ROBUST_P && self.eta_squared >= NON_ROBUST_ETA2)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RobustnessConfig {
    pub clamp_delta: f64,
    pub ci_method: CiMethod,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        Self {
            clamp_delta: DEFAULT_CLAMP_DELTA,
            ci_method: CiMethod::Normal,
        }
    }
}

/// Relative scores keyed by rule, then by variant (original plus transformations).
pub type VariantScores = BTreeMap<String, BTreeMap<String, Vec<f64>>>;

pub fn robustness_report(scores: &VariantScores, config: &RobustnessConfig) -> Result<Vec<AnovaResult>> {
    scores
        .iter()
        .map(|(rule, variants)| {
            let transformed: Vec<Vec<f64>> = variants
                .values()
                .map(|v| v.iter().map(|&p| logit(p, config.clamp_delta)).collect())
                .collect();
            let table = one_way_anova(&transformed).map_err(|e| match e {
                Error::Degenerate(msg) => Error::Degenerate(format!("{rule}: {msg}")),
                other => other,
            })?;
            let pooled: Vec<f64> = variants.values().flatten().copied().collect();
            Ok(AnovaResult {
                rule_id: rule.clone(),
                f_stat: table.f_stat,
                p_value: table.p_value,
                eta_squared: table.eta_squared,
                ci95: ci95_with(&pooled, config.ci_method)?,
                group_sizes: table.group_sizes,
                variants: variants.keys().cloned().collect(),
                ss_between: table.ss_between,
                ss_within: table.ss_within,
            })
        })
        .collect()
}
