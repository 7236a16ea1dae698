//! Refutation tests for an effect estimate.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::regression::standardize;
use super::{CausalResult, Design, EstimateConfig, ExperimentFrame};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefutationKind {
    RandomCommonCause,
    Placebo,
    UnobservedConfounder,
    Subset,
}

impl fmt::Display for RefutationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RefutationKind::RandomCommonCause => "random_common_cause",
            RefutationKind::Placebo => "placebo",
            RefutationKind::UnobservedConfounder => "unobserved_confounder",
            RefutationKind::Subset => "subset",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refutation {
    pub new_estimate: f64,
    /// `None` for sensitivity analyses that have no pass criterion.
    pub passed: Option<bool>,
}

#[derive(Debug, Clone, Copy)]
pub struct RefuteConfig {
    /// Correlation of the simulated confounder with treatment and outcome.
    pub kappa: f64,
    pub subset_fraction: f64,
    pub subset_rounds: usize,
}

impl Default for RefuteConfig {
    fn default() -> Self {
        Self {
            kappa: 0.3,
            subset_fraction: 0.8,
            subset_rounds: 20,
        }
    }
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Runs the four refutations against `result`, re-estimating on the same
/// treatment/control rows of `frame`.
pub fn refute(
    frame: &ExperimentFrame,
    result: &CausalResult,
    config: &EstimateConfig,
    refute: &RefuteConfig,
    seed: u64,
) -> Result<BTreeMap<RefutationKind, Refutation>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let design = Design::build(
        frame,
        &result.treatment_level,
        &result.control_level,
        config.outcome,
    );
    let n = design.outcome.len();
    let (ate, se) = (result.ate, result.se);
    let mut out = BTreeMap::new();

    let mut rcc = design.clone();
    rcc.confounders.push(normals(&mut rng, n));
    let (est, _, _) = rcc.fit()?;
    out.insert(
        RefutationKind::RandomCommonCause,
        Refutation {
            new_estimate: est,
            passed: Some((est - ate).abs() < 0.1 * ate.abs() + 0.01),
        },
    );

    let mut placebo = design.clone();
    placebo.indicator.shuffle(&mut rng);
    let (est, _, _) = placebo.fit()?;
    out.insert(
        RefutationKind::Placebo,
        Refutation {
            new_estimate: est,
            passed: Some(est.abs() < f64::max(0.02, 2.0 * se)),
        },
    );

    // U = k*T~ + k*Y~ + sqrt(1 - 2k^2)*e, over standardized T and Y
    let k = refute.kappa;
    let t_std = standardize(&design.indicator).unwrap_or_else(|| vec![0.0; n]);
    let y_std = standardize(&design.outcome).unwrap_or_else(|| vec![0.0; n]);
    let resid_w = (1.0 - 2.0 * k * k).max(0.0).sqrt();
    let e = normals(&mut rng, n);
    let mut hidden = design.clone();
    hidden
        .confounders
        .push((0..n).map(|r| k * t_std[r] + k * y_std[r] + resid_w * e[r]).collect());
    let (est, _, _) = hidden.fit()?;
    out.insert(
        RefutationKind::UnobservedConfounder,
        Refutation {
            new_estimate: est,
            passed: None,
        },
    );

    let take = ((n as f64) * refute.subset_fraction).round() as usize;
    let mut total = 0.0;
    for _ in 0..refute.subset_rounds {
        let mut idx = index::sample(&mut rng, n, take).into_vec();
        idx.sort_unstable();
        let (est, _, _) = design.subset(&idx).fit()?;
        total += est;
    }
    let mean = total / refute.subset_rounds.max(1) as f64;
    out.insert(
        RefutationKind::Subset,
        Refutation {
            new_estimate: mean,
            passed: Some((mean - ate).abs() <= 2.0 * se),
        },
    );

    Ok(out)
}
