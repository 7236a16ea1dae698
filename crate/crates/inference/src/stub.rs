//! A deterministic completions endpoint for hermetic tests and demos.
//!
//! The toy model tokenizes on word, number and punctuation boundaries (leading
//! spaces and tabs stick to the next token). Prompt tokens get a logprob
//! derived from a hash of their text; the first one gets `null`, like real
//! servers. Completions continue any memorized snippet whose prefix ends the
//! prompt, and every generated token carries one configurable logprob, which
//! prompt markers can override.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, LazyLock};
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use regex::Regex;
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tracing::info;

use crate::client::{WireChoice, WireLogprobs, WireResponse};

static TOKEN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\n|[ \t]*(?:[A-Za-z_][A-Za-z0-9_]*|[0-9]+|[^\sA-Za-z0-9_])|[ \t]+|\s").unwrap()
});

pub fn tokenize(text: &str) -> Vec<&str> {
    TOKEN.find_iter(text).map(|m| m.as_str()).collect()
}

/// Teacher-forced logprob of a prompt token, in `[-3, -0.05]`.
pub fn prompt_logprob(token: &str) -> f64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in token.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    -(0.05 + 2.95 * (h >> 11) as f64 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone)]
pub struct StubConfig {
    pub model: String,
    /// Snippets the model reproduces when the prompt ends with one of their
    /// prefixes (at least 4 bytes long).
    pub memorized: Vec<String>,
    /// Completion when no memorized snippet matches.
    pub fallback_completion: String,
    pub generated_logprob: f64,
    /// The first marker found in the prompt replaces `generated_logprob`.
    pub prompt_markers: Vec<(String, f64)>,
    /// Fixed tokens returned for echo requests instead of the tokenizer's.
    pub fixed_echo: Option<Vec<(String, f64)>>,
    /// Request fields rejected as unsupported.
    pub unsupported_fields: Vec<String>,
    /// Return no logprobs for echoed prompt tokens.
    pub omit_prompt_logprobs: bool,
    pub latency: Duration,
    /// Answer the first N requests with HTTP 503.
    pub fail_first: usize,
}

impl Default for StubConfig {
    fn default() -> Self {
        Self {
            model: "stub-model".into(),
            memorized: Vec::new(),
            fallback_completion: "\n    pass\n".into(),
            generated_logprob: 0.8f64.ln(),
            prompt_markers: Vec::new(),
            fixed_echo: None,
            unsupported_fields: Vec::new(),
            omit_prompt_logprobs: false,
            latency: Duration::ZERO,
            fail_first: 0,
        }
    }
}

#[derive(Debug, Default)]
pub struct StubStats {
    pub requests: AtomicUsize,
    pub in_flight: AtomicUsize,
    pub max_in_flight: AtomicUsize,
}

struct AppState {
    config: StubConfig,
    stats: Arc<StubStats>,
}

/// Shortest memorized prefix (in bytes) that counts as a match.
const MIN_MATCH: usize = 4;

fn completion_text(config: &StubConfig, prompt: &str) -> String {
    let mut best: Option<(usize, &str)> = None;
    for s in &config.memorized {
        for (k, _) in s.char_indices().skip(1).chain([(s.len(), ' ')]) {
            if best.is_some_and(|(b, _)| b >= k) {
                continue;
            }
            if k >= MIN_MATCH && k < s.len() && prompt.ends_with(&s[..k]) {
                best = Some((k, &s[k..]));
            }
        }
    }
    best.map(|(_, rest)| rest.to_owned())
        .unwrap_or_else(|| config.fallback_completion.clone())
}

fn respond(config: &StubConfig, body: &Value) -> Result<WireResponse, (StatusCode, String)> {
    let prompt = body["prompt"]
        .as_str()
        .ok_or((StatusCode::BAD_REQUEST, "prompt must be a string".to_owned()))?;
    if let Some(f) = config.unsupported_fields.iter().find(|f| body.get(f.as_str()).is_some()) {
        return Err((StatusCode::BAD_REQUEST, format!("unsupported parameter: {f}")));
    }
    let echo = body["echo"].as_bool().unwrap_or(false);
    let max_tokens = body["max_tokens"].as_u64().unwrap_or(16) as usize;

    let mut tokens: Vec<String> = Vec::new();
    let mut logprobs: Vec<Option<f64>> = Vec::new();
    if echo {
        match &config.fixed_echo {
            Some(fixed) => {
                for (t, lp) in fixed {
                    tokens.push(t.clone());
                    logprobs.push(Some(*lp));
                }
            }
            None => {
                for (k, t) in tokenize(prompt).into_iter().enumerate() {
                    tokens.push(t.to_owned());
                    let lp = (k > 0 && !config.omit_prompt_logprobs).then(|| prompt_logprob(t));
                    logprobs.push(lp);
                }
            }
        }
    }
    let generated_lp = config
        .prompt_markers
        .iter()
        .find(|(m, _)| prompt.contains(m.as_str()))
        .map_or(config.generated_logprob, |(_, lp)| *lp);
    let completion = completion_text(config, prompt);
    let generated: Vec<&str> = tokenize(&completion).into_iter().take(max_tokens).collect();
    let finish = if generated.len() < max_tokens { "stop" } else { "length" };
    for t in &generated {
        tokens.push((*t).to_owned());
        logprobs.push(Some(generated_lp));
    }
    let text: String = tokens.concat();
    let mut offset = 0;
    let text_offset = tokens
        .iter()
        .map(|t| {
            let o = offset;
            offset += t.chars().count();
            o
        })
        .collect();
    Ok(WireResponse {
        model: Some(config.model.clone()),
        choices: vec![WireChoice {
            text,
            logprobs: Some(WireLogprobs {
                tokens,
                token_logprobs: logprobs,
                text_offset,
            }),
            finish_reason: Some(finish.into()),
        }],
    })
}

async fn completions(State(state): State<Arc<AppState>>, Json(body): Json<Value>) -> (StatusCode, Json<Value>) {
    let stats = &state.stats;
    let n = stats.requests.fetch_add(1, Ordering::SeqCst);
    let now = stats.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    stats.max_in_flight.fetch_max(now, Ordering::SeqCst);
    if !state.config.latency.is_zero() {
        tokio::time::sleep(state.config.latency).await;
    }
    let out = if n < state.config.fail_first {
        (StatusCode::SERVICE_UNAVAILABLE, Json(json!({"error": {"message": "warming up"}})))
    } else {
        match respond(&state.config, &body) {
            Ok(r) => (StatusCode::OK, Json(serde_json::to_value(r).expect("serializable"))),
            Err((code, msg)) => (code, Json(json!({"error": {"message": msg}}))),
        }
    };
    stats.in_flight.fetch_sub(1, Ordering::SeqCst);
    out
}

pub fn router(config: StubConfig, stats: Arc<StubStats>) -> Router {
    Router::new()
        .route("/v1/completions", post(completions))
        .with_state(Arc::new(AppState { config, stats }))
}

/// A stub bound to a local port, served on the current tokio runtime.
pub struct StubServer {
    addr: SocketAddr,
    stats: Arc<StubStats>,
    shutdown: Option<oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<()>,
}

impl StubServer {
    pub async fn start(config: StubConfig) -> std::io::Result<Self> {
        Self::bind(config, "127.0.0.1:0").await
    }

    pub async fn bind(config: StubConfig, addr: &str) -> std::io::Result<Self> {
        let listener = TcpListener::bind(addr).await?;
        let addr = listener.local_addr()?;
        let stats = Arc::new(StubStats::default());
        let app = router(config, stats.clone());
        let (tx, rx) = oneshot::channel();
        let task = tokio::spawn(async move {
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
        info!(%addr, "stub endpoint listening");
        Ok(Self {
            addr,
            stats,
            shutdown: Some(tx),
            task,
        })
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn stats(&self) -> &StubStats {
        &self.stats
    }

    pub async fn stop(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = (&mut self.task).await;
    }

    /// Serves until the process ends or the task is aborted.
    pub async fn wait(mut self) {
        let _ = (&mut self.task).await;
    }
}

/// A stub running on its own thread and runtime, for synchronous callers.
pub struct BackgroundStub {
    base_url: String,
    stats: Arc<StubStats>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl BackgroundStub {
    pub fn start(config: StubConfig) -> std::io::Result<Self> {
        let (ready_tx, ready_rx) = std::sync::mpsc::channel();
        let (stop_tx, stop_rx) = oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let rt = match tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build() {
                Ok(rt) => rt,
                Err(e) => {
                    let _ = ready_tx.send(Err(e));
                    return;
                }
            };
            rt.block_on(async move {
                match StubServer::start(config).await {
                    Ok(server) => {
                        let _ = ready_tx.send(Ok((server.base_url(), server.stats.clone())));
                        let _ = stop_rx.await;
                        server.stop().await;
                    }
                    Err(e) => {
                        let _ = ready_tx.send(Err(e));
                    }
                }
            });
        });
        let (base_url, stats) = ready_rx
            .recv()
            .map_err(|e| std::io::Error::other(e.to_string()))??;
        Ok(Self {
            base_url,
            stats,
            shutdown: Some(stop_tx),
            thread: Some(thread),
        })
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    pub fn stats(&self) -> &StubStats {
        &self.stats
    }
}

impl Drop for BackgroundStub {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_tiles_text() {
        let text = "def f(a):\n\treturn a  + 10 # é\n";
        let toks = tokenize(text);
        assert_eq!(toks.concat(), text);
        assert_eq!(tokenize("a = 1"), vec!["a", " =", " 1"]);
        assert_eq!(tokenize("x\n\n  y"), vec!["x", "\n", "\n", "  y"]);
    }

    #[test]
    fn memorized_continuation() {
        let config = StubConfig {
            memorized: vec!["def f():\n    return 1\n".into()],
            ..StubConfig::default()
        };
        assert_eq!(completion_text(&config, "Complete this\ndef f():\n"), "    return 1\n");
        assert_eq!(completion_text(&config, "unrelated"), "\n    pass\n");
    }

    #[test]
    fn prompt_logprobs_are_valid() {
        for t in ["a", " =", "\n", "é", ""] {
            let lp = prompt_logprob(t);
            assert!((-3.0..=-0.05).contains(&lp), "{t:?} -> {lp}");
        }
    }
}
