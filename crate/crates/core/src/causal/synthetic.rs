//! Structural causal models with a planted effect, for validating estimators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{ExperimentFrame, FrameRow};

/// `Z ~ N(0,1)`, `T ~ Bernoulli(sigmoid(confounding * Z))`,
/// `Y = effect * T + z_weight * Z + N(0, noise_sd)`.
#[derive(Debug, Clone, Copy)]
pub struct PlantedScm {
    pub n: usize,
    pub effect: f64,
    pub z_weight: f64,
    pub confounding: f64,
    pub noise_sd: f64,
    /// When false, Z is left out of the frame's covariates.
    pub observe_z: bool,
}

impl Default for PlantedScm {
    fn default() -> Self {
        Self {
            n: 10_000,
            effect: 0.3,
            z_weight: 0.5,
            confounding: 1.0,
            noise_sd: 0.1,
            observe_z: true,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn planted_frame(scm: &PlantedScm, seed: u64) -> ExperimentFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let noise = Normal::new(0.0, scm.noise_sd).expect("noise sd is finite");
    let rows = (0..scm.n)
        .map(|k| {
            let z: f64 = std_normal.sample(&mut rng);
            let treated = rng.random::<f64>() < sigmoid(scm.confounding * z);
            let t = f64::from(u8::from(treated));
            let y = scm.effect * t + scm.z_weight * z + noise.sample(&mut rng);
            FrameRow {
                sample_id: format!("syn{k}"),
                rule_id: "SYN".into(),
                level: if treated { "treated" } else { "control" }.into(),
                y1: y,
                y0: y,
                covariates: if scm.observe_z { vec![z] } else { Vec::new() },
            }
        })
        .collect();
    ExperimentFrame {
        treatment: "T0".into(),
        control: "control".into(),
        levels: vec!["control".into(), "treated".into()],
        feature_names: if scm.observe_z { vec!["z".into()] } else { Vec::new() },
        rows,
    }
}
