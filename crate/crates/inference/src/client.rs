//! Async client for OpenAI-style `/v1/completions` endpoints with logprobs.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use smellprop_core::{TokenRecord, TokenTrace};
use tokio::sync::Semaphore;
use tracing::{debug, warn};

use crate::config::{DecodingConfig, EndpointConfig};
use crate::error::{Error, Result};

/// Number of snippet tokens kept as the prompt: `max(1, floor(fraction * n))`.
pub fn prefix_token_count(n_tokens: usize, cut_fraction: f64) -> usize {
    ((cut_fraction * n_tokens as f64).floor() as usize).clamp(1, n_tokens.max(1))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct WireLogprobs {
    #[serde(default)]
    pub tokens: Vec<String>,
    #[serde(default)]
    pub token_logprobs: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub text_offset: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WireChoice {
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub logprobs: Option<WireLogprobs>,
    #[serde(default)]
    pub finish_reason: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WireResponse {
    #[serde(default)]
    pub model: Option<String>,
    pub choices: Vec<WireChoice>,
}

/// Tokens of one completion response, with byte offsets relative to its text.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub tokens: Vec<TokenRecord>,
    pub model: String,
    /// Whether a missing logprob (typically the very first prompt token) was set to 0.
    pub imputed: bool,
}

fn retryable(status: reqwest::StatusCode) -> bool {
    status.as_u16() == 429 || (status.is_server_error() && status.as_u16() != 501)
}

fn unsupported_body(body: &str) -> bool {
    let b = body.to_ascii_lowercase();
    b.contains("unsupported") || b.contains("not supported")
}

#[derive(Clone)]
pub struct Client {
    http: reqwest::Client,
    endpoint: EndpointConfig,
    permits: Arc<Semaphore>,
}

impl Client {
    pub fn new(endpoint: EndpointConfig) -> Result<Self> {
        endpoint.validate()?;
        let http = reqwest::Client::builder()
            .timeout(endpoint.request_timeout)
            .build()
            .map_err(|e| Error::Endpoint(e.to_string()))?;
        Ok(Self {
            http,
            permits: Arc::new(Semaphore::new(endpoint.max_concurrent)),
            endpoint,
        })
    }

    pub fn endpoint(&self) -> &EndpointConfig {
        &self.endpoint
    }

    fn url(&self) -> String {
        format!("{}/v1/completions", self.endpoint.base_url.trim_end_matches('/'))
    }

    async fn post_once(&self, body: &Value) -> Result<WireResponse, (bool, Error)> {
        let _permit = self.permits.acquire().await.expect("semaphore is never closed");
        let mut req = self.http.post(self.url()).json(body);
        if let Some(key) = &self.endpoint.api_key {
            req = req.bearer_auth(key.expose());
        }
        let resp = req.send().await.map_err(|e| (true, Error::Endpoint(e.to_string())))?;
        let status = resp.status();
        let text = resp.text().await.map_err(|e| (true, Error::Endpoint(e.to_string())))?;
        if status.is_success() {
            return serde_json::from_str(&text)
                .map_err(|e| (false, Error::Endpoint(format!("malformed response: {e}"))));
        }
        if status.as_u16() == 501 || (status.is_client_error() && unsupported_body(&text)) {
            return Err((false, Error::Unsupported(text)));
        }
        Err((retryable(status), Error::Endpoint(format!("HTTP {status}: {text}"))))
    }

    /// Posts with bounded concurrency, retrying transient failures with
    /// exponential backoff plus jitter.
    pub async fn post(&self, body: &Value) -> Result<WireResponse> {
        let mut attempt = 0;
        loop {
            match self.post_once(body).await {
                Ok(r) => return Ok(r),
                Err((true, e)) if attempt < self.endpoint.retries => {
                    let base = self.endpoint.backoff.as_secs_f64() * 2f64.powi(attempt as i32);
                    let jitter: f64 = rand::rng().random_range(0.0..0.5);
                    let delay = Duration::from_secs_f64(base * (1.0 + jitter));
                    warn!(attempt, ?delay, error = %e, "retrying completion request");
                    tokio::time::sleep(delay).await;
                    attempt += 1;
                }
                Err((_, e)) => return Err(e),
            }
        }
    }

    fn request(&self, prompt: &str, echo: bool, fields: serde_json::Map<String, Value>) -> Value {
        let mut body = json!({
            "model": self.endpoint.model,
            "prompt": prompt,
            "echo": echo,
            "logprobs": 1,
        });
        body.as_object_mut().expect("object literal").extend(fields);
        body
    }

    fn completion(&self, resp: WireResponse, require_logprobs: bool) -> Result<Completion> {
        let model = resp.model.clone().unwrap_or_else(|| self.endpoint.model.clone());
        let choice = resp
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| Error::Endpoint("response has no choices".into()))?;
        let lp = choice.logprobs.unwrap_or_default();
        if lp.tokens.len() != lp.token_logprobs.len() && !lp.token_logprobs.is_empty() {
            return Err(Error::Endpoint(format!(
                "{} tokens but {} logprobs",
                lp.tokens.len(),
                lp.token_logprobs.len()
            )));
        }
        let has_logprobs = lp.token_logprobs.iter().any(Option::is_some);
        if require_logprobs && lp.tokens.len() > 1 && !has_logprobs {
            return Err(Error::Unsupported("prompt token logprobs".into()));
        }
        let joined: String = lp.tokens.concat();
        if joined != choice.text {
            return Err(Error::Endpoint("token texts do not reconstruct the response text".into()));
        }
        let mut imputed = false;
        let mut pos = 0;
        let mut tokens = Vec::with_capacity(lp.tokens.len());
        for (k, text) in lp.tokens.into_iter().enumerate() {
            let logprob = match lp.token_logprobs.get(k).copied().flatten() {
                Some(v) => v,
                None => {
                    imputed = true;
                    0.0
                }
            };
            let end = pos + text.len();
            tokens.push(TokenRecord::new(text, pos, end, logprob));
            pos = end;
        }
        Ok(Completion {
            text: choice.text,
            tokens,
            model,
            imputed,
        })
    }

    /// The endpoint's tokenization of `text`, with teacher-forced logprobs.
    pub async fn echo(&self, text: &str) -> Result<Completion> {
        let mut fields = serde_json::Map::new();
        fields.insert("max_tokens".into(), json!(0));
        fields.insert("temperature".into(), json!(0.0));
        let resp = self.post(&self.request(text, true, fields)).await?;
        let c = self.completion(resp, true)?;
        if c.text != text {
            return Err(Error::Endpoint("echoed text differs from the prompt".into()));
        }
        Ok(c)
    }

    /// Teacher-forced scoring of a fixed snippet.
    pub async fn score_fixed(&self, sample_id: &str, snippet: &str) -> Result<TokenTrace> {
        if snippet.is_empty() {
            return Err(Error::Precondition(format!("{sample_id}: snippet is empty")));
        }
        let c = self.echo(snippet).await?;
        let mut meta = BTreeMap::from([
            ("model".to_string(), c.model.clone()),
            ("mode".to_string(), "teacher_forced".to_string()),
        ]);
        if c.imputed {
            meta.insert("imputed_logprobs".into(), "0.0".into());
        }
        Ok(TokenTrace::new(sample_id, snippet, c.tokens, None, meta)?)
    }

    /// The first `max(1, floor(cut_fraction * n))` tokens of the snippet.
    pub async fn prefix(&self, snippet: &str, cut_fraction: f64) -> Result<(String, usize)> {
        if !(cut_fraction > 0.0 && cut_fraction < 1.0) {
            return Err(Error::Precondition(format!("cut_fraction {cut_fraction} outside (0, 1)")));
        }
        let tokens = self.echo(snippet).await?.tokens;
        if tokens.len() < 2 {
            return Err(Error::Precondition(format!(
                "snippet has {} token(s), need at least 2",
                tokens.len()
            )));
        }
        let k = prefix_token_count(tokens.len(), cut_fraction);
        Ok((snippet[..tokens[k - 1].byte_end].to_owned(), k))
    }

    /// Sends `prompt` and builds a trace over `code_prefix` + completion whose
    /// generated segment starts at the end of `code_prefix`.
    pub async fn complete(
        &self,
        sample_id: &str,
        prompt: &str,
        code_prefix: &str,
        config: &DecodingConfig,
    ) -> Result<TokenTrace> {
        config.validate()?;
        let resp = self.post(&self.request(prompt, false, config.request_fields())).await?;
        let c = self.completion(resp, false)?;
        if c.tokens.is_empty() || c.text.is_empty() {
            return Err(Error::EmptyCompletion(sample_id.to_owned()));
        }
        if c.imputed {
            return Err(Error::Unsupported("logprobs for generated tokens".into()));
        }
        let offset = code_prefix.len();
        let tokens = c
            .tokens
            .into_iter()
            .map(|t| TokenRecord::new(t.text, t.byte_start + offset, t.byte_end + offset, t.logprob))
            .collect();
        let meta = BTreeMap::from([
            ("model".to_string(), c.model),
            ("decoding".to_string(), config.id()),
            ("logprob_source".to_string(), "decoding_pass".to_string()),
        ]);
        debug!(sample_id, generated = c.text.len(), "completion received");
        Ok(TokenTrace::new(
            sample_id,
            format!("{code_prefix}{}", c.text),
            tokens,
            Some(offset),
            meta,
        )?)
    }

    /// Cuts the snippet to its token prefix and completes it.
    pub async fn complete_prefix(
        &self,
        sample_id: &str,
        snippet: &str,
        cut_fraction: f64,
        config: &DecodingConfig,
    ) -> Result<TokenTrace> {
        let (prefix, k) = self.prefix(snippet, cut_fraction).await?;
        let trace = self.complete(sample_id, &prefix, &prefix, config).await?;
        Ok(trace
            .with_meta("cut_fraction", cut_fraction.to_string())
            .with_meta("prefix_tokens", k.to_string()))
    }
}
