use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable consulted when no API key is configured.
pub const API_KEY_ENV: &str = "SMELLPROP_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Greedy,
    Beam,
    Sampling,
    Contrastive,
    TopK,
    TopP,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Greedy,
        Strategy::Beam,
        Strategy::Sampling,
        Strategy::Contrastive,
        Strategy::TopK,
        Strategy::TopP,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Greedy => "greedy",
            Strategy::Beam => "beam",
            Strategy::Sampling => "sampling",
            Strategy::Contrastive => "contrastive",
            Strategy::TopK => "top_k",
            Strategy::TopP => "top_p",
        }
    }

    fn samples(&self) -> bool {
        matches!(self, Strategy::Sampling | Strategy::TopK | Strategy::TopP)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::Config(format!("unknown decoding strategy `{s}`")))
    }
}

/// Decoding settings. Strategy-specific fields are `Some` exactly when the
/// strategy uses them; [`DecodingConfig::new`] fills in the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingConfig {
    pub strategy: Strategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_beams: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub early_stopping: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
    pub temperature: f64,
    pub max_new_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl DecodingConfig {
    pub fn new(strategy: Strategy, max_new_tokens: u32) -> Self {
        let mut c = DecodingConfig {
            strategy,
            num_beams: None,
            early_stopping: None,
            penalty_alpha: None,
            top_k: None,
            top_p: None,
            temperature: 1.0,
            max_new_tokens,
            seed: None,
        };
        match strategy {
            Strategy::Beam => {
                c.num_beams = Some(5);
                c.early_stopping = Some(true);
            }
            Strategy::Contrastive => {
                c.penalty_alpha = Some(0.6);
                c.top_k = Some(4);
            }
            Strategy::TopK => c.top_k = Some(50),
            Strategy::TopP => c.top_p = Some(0.9),
            Strategy::Greedy | Strategy::Sampling => {}
        }
        c
    }

    pub fn greedy(max_new_tokens: u32) -> Self {
        Self::new(Strategy::Greedy, max_new_tokens)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.strategy;
        let expect = |field: &str, present: bool, wanted: bool| -> Result<()> {
            match (present, wanted) {
                (true, false) => Err(Error::Config(format!("{field} is not used by {s} decoding"))),
                (false, true) => Err(Error::Config(format!("{s} decoding requires {field}"))),
                _ => Ok(()),
            }
        };
        expect("num_beams", self.num_beams.is_some(), s == Strategy::Beam)?;
        expect("early_stopping", self.early_stopping.is_some(), s == Strategy::Beam)?;
        expect("penalty_alpha", self.penalty_alpha.is_some(), s == Strategy::Contrastive)?;
        expect(
            "top_k",
            self.top_k.is_some(),
            matches!(s, Strategy::Contrastive | Strategy::TopK),
        )?;
        expect("top_p", self.top_p.is_some(), s == Strategy::TopP)?;

        if self.num_beams == Some(0) || self.top_k == Some(0) {
            return Err(Error::Config("num_beams and top_k must be positive".into()));
        }
        if let Some(a) = self.penalty_alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::Config(format!("penalty_alpha {a} outside [0, 1]")));
            }
        }
        if let Some(p) = self.top_p {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Config(format!("top_p {p} outside (0, 1]")));
            }
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!("temperature {} must be positive", self.temperature)));
        }
        if self.max_new_tokens == 0 {
            return Err(Error::Config("max_new_tokens must be positive".into()));
        }
        Ok(())
    }

    /// Stable identifier recorded in trace metadata, e.g. `beam(num_beams=5,early_stopping=true)`.
    pub fn id(&self) -> String {
        let mut parts = Vec::new();
        if let Some(v) = self.num_beams {
            parts.push(format!("num_beams={v}"));
        }
        if let Some(v) = self.early_stopping {
            parts.push(format!("early_stopping={v}"));
        }
        if let Some(v) = self.penalty_alpha {
            parts.push(format!("penalty_alpha={v}"));
        }
        if let Some(v) = self.top_k {
            parts.push(format!("top_k={v}"));
        }
        if let Some(v) = self.top_p {
            parts.push(format!("top_p={v}"));
        }
        if self.temperature != 1.0 {
            parts.push(format!("temperature={}", self.temperature));
        }
        if let Some(v) = self.seed {
            parts.push(format!("seed={v}"));
        }
        format!("{}({})", self.strategy, parts.join(","))
    }

    /// Request body fields for this configuration.
    pub(crate) fn request_fields(&self) -> serde_json::Map<String, serde_json::Value> {
        use serde_json::json;
        let mut m = serde_json::Map::new();
        m.insert("max_tokens".into(), json!(self.max_new_tokens));
        let greedy_like = matches!(self.strategy, Strategy::Greedy | Strategy::Beam | Strategy::Contrastive);
        m.insert("temperature".into(), json!(if greedy_like { 0.0 } else { self.temperature }));
        if let Some(v) = self.num_beams {
            m.insert("num_beams".into(), json!(v));
        }
        if let Some(v) = self.early_stopping {
            m.insert("early_stopping".into(), json!(v));
        }
        if let Some(v) = self.penalty_alpha {
            m.insert("penalty_alpha".into(), json!(v));
        }
        if let Some(v) = self.top_k {
            m.insert("top_k".into(), json!(v));
        }
        if let Some(v) = self.top_p {
            m.insert("top_p".into(), json!(v));
        }
        if let (true, Some(seed)) = (self.strategy.samples(), self.seed) {
            m.insert("seed".into(), json!(seed));
        }
        m
    }
}

/// An API key that never shows up in `Debug` output or serialized configs.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct Secret(String);

impl Secret {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Secret(***)")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointConfig {
    pub base_url: String,
    pub api_key: Option<Secret>,
    pub model: String,
    pub request_timeout: Duration,
    pub max_concurrent: usize,
    pub retries: u32,
    /// Base delay of the exponential backoff between retries.
    pub backoff: Duration,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            api_key: None,
            model: model.into(),
            request_timeout: Duration::from_secs(60),
            max_concurrent: 4,
            retries: 3,
            backoff: Duration::from_millis(250),
        }
    }

    /// Fills `api_key` from [`API_KEY_ENV`] when it is not set explicitly.
    pub fn with_env_key(mut self) -> Self {
        if self.api_key.is_none() {
            self.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()).map(Secret::new);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_concurrent == 0 {
            return Err(Error::Config("max_concurrent must be at least 1".into()));
        }
        if self.base_url.is_empty() || self.model.is_empty() {
            return Err(Error::Config("base_url and model are required".into()));
        }
        Ok(())
    }
}
