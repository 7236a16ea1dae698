use std::sync::atomic::Ordering;
use std::time::Duration;

use proptest::prelude::*;
use smellprop_inference::stub::{self, StubConfig, StubServer};
use smellprop_inference::{prefix_token_count, Client, DecodingConfig, EndpointConfig, Error, Strategy};

fn client(server: &StubServer) -> Client {
    let mut e = EndpointConfig::new(server.base_url(), "stub-model");
    e.backoff = Duration::from_millis(5);
    Client::new(e).unwrap()
}

#[tokio::test]
async fn fixed_scoring_round_trips_stubbed_logprobs() {
    let fixed = vec![("a".into(), -0.1), (" ".into(), -0.2), ("=".into(), -0.3), (" 1".into(), -0.4)];
    let server = StubServer::start(StubConfig { fixed_echo: Some(fixed), ..Default::default() }).await.unwrap();
    let c = client(&server);
    let t = c.score_fixed("s1", "a = 1").await.unwrap();
    assert_eq!(t.len(), 4);
    let lps: Vec<f64> = t.tokens().iter().map(|t| t.logprob).collect();
    assert_eq!(lps, vec![-0.1, -0.2, -0.3, -0.4]);
    assert_eq!(t.generated_from(), None);
    assert_eq!(t.meta()["model"], "stub-model");

    assert!(matches!(c.score_fixed("s2", "").await, Err(Error::Precondition(_))));
    server.stop().await;
}

#[tokio::test]
async fn positive_logprob_fails_validation() {
    let fixed = vec![("a".into(), -0.1), (" = 1".into(), 0.5)];
    let server = StubServer::start(StubConfig { fixed_echo: Some(fixed), ..Default::default() }).await.unwrap();
    let err = client(&server).score_fixed("s", "a = 1").await.unwrap_err();
    assert!(matches!(err, Error::Core(smellprop_core::Error::Schema(_))), "{err}");
}

#[tokio::test]
async fn first_prompt_token_logprob_is_imputed() {
    let server = StubServer::start(StubConfig::default()).await.unwrap();
    let t = client(&server).score_fixed("s", "x = 10\n").await.unwrap();
    assert_eq!(t.tokens()[0].logprob, 0.0);
    assert_eq!(t.tokens()[1].logprob, stub::prompt_logprob(" ="));
    assert_eq!(t.meta()["imputed_logprobs"], "0.0");
    assert_eq!(t.source(), "x = 10\n");
}

#[tokio::test]
async fn prefix_cut_and_completion() {
    let snippet = "def f(a):\n    return a\n"; // def| f|(|a|)|:|\n|    return| a|\n
    assert_eq!(stub::tokenize(snippet).len(), 10);
    let server = StubServer::start(StubConfig { memorized: vec![snippet.into()], ..Default::default() })
        .await
        .unwrap();
    let c = client(&server);
    let cfg = DecodingConfig::greedy(64);
    let t = c.complete_prefix("s", snippet, 0.5, &cfg).await.unwrap();
    assert_eq!(t.generated_from(), Some("def f(a)".len()));
    assert_eq!(t.source(), snippet);
    assert_eq!(t.meta()["prefix_tokens"], "5");
    assert_eq!(t.meta()["decoding"], "greedy()");
    assert!(t.tokens().iter().all(|k| (k.logprob - 0.8f64.ln()).abs() < 1e-15));

    let again = c.complete_prefix("s", snippet, 0.5, &cfg).await.unwrap();
    assert_eq!(again, t);

    let short = c.complete_prefix("s", "a b", 0.999, &cfg).await.unwrap();
    assert_eq!(short.generated_from(), Some(1));
    assert!(matches!(
        c.complete_prefix("s", "a", 0.5, &cfg).await,
        Err(Error::Precondition(_))
    ));
}

#[tokio::test]
async fn empty_completion_is_an_error() {
    let server = StubServer::start(StubConfig { fallback_completion: String::new(), ..Default::default() })
        .await
        .unwrap();
    let err = client(&server)
        .complete("s", "x = ", "x = ", &DecodingConfig::greedy(8))
        .await
        .unwrap_err();
    assert!(matches!(err, Error::EmptyCompletion(_)));
}

#[tokio::test]
async fn unsupported_features_are_reported() {
    let server = StubServer::start(StubConfig {
        unsupported_fields: vec!["penalty_alpha".into()],
        omit_prompt_logprobs: true,
        ..Default::default()
    })
    .await
    .unwrap();
    let c = client(&server);
    let err = c
        .complete("s", "x = ", "x = ", &DecodingConfig::new(Strategy::Contrastive, 8))
        .await
        .unwrap_err();
    assert!(matches!(err, Error::Unsupported(_)), "{err}");
    assert!(matches!(c.score_fixed("s", "x = 1").await, Err(Error::Unsupported(_))));
    // beam fields are accepted by this stub
    c.complete("s", "x = ", "x = ", &DecodingConfig::new(Strategy::Beam, 8)).await.unwrap();
}

#[tokio::test]
async fn transient_failures_are_retried() {
    let server = StubServer::start(StubConfig { fail_first: 2, ..Default::default() }).await.unwrap();
    let t = client(&server).score_fixed("s", "x = 1").await.unwrap();
    assert_eq!(t.len(), 3);
    assert_eq!(server.stats().requests.load(Ordering::SeqCst), 3);

    let server = StubServer::start(StubConfig { fail_first: 5, ..Default::default() }).await.unwrap();
    let mut e = EndpointConfig::new(server.base_url(), "m");
    e.retries = 1;
    e.backoff = Duration::from_millis(1);
    let err = Client::new(e).unwrap().score_fixed("s", "x = 1").await.unwrap_err();
    assert!(matches!(err, Error::Endpoint(_)));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrency_is_bounded() {
    let server = StubServer::start(StubConfig { latency: Duration::from_millis(40), ..Default::default() })
        .await
        .unwrap();
    let mut e = EndpointConfig::new(server.base_url(), "m");
    e.max_concurrent = 3;
    let c = Client::new(e).unwrap();
    let jobs: Vec<_> = (0..12)
        .map(|k| {
            let c = c.clone();
            tokio::spawn(async move { c.score_fixed(&format!("s{k}"), "x = 1").await })
        })
        .collect();
    for j in jobs {
        j.await.unwrap().unwrap();
    }
    let peak = server.stats().max_in_flight.load(Ordering::SeqCst);
    assert!(peak <= 3 && peak >= 2, "peak in flight {peak}");
}

proptest! {
    #[test]
    fn prefix_count_rule(n in 1usize..5000, frac in 0.0001f64..0.9999) {
        let k = prefix_token_count(n, frac);
        prop_assert_eq!(k, ((frac * n as f64).floor() as usize).max(1).min(n));
        prop_assert!(k >= 1 && k <= n);
    }
}
