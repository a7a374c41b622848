mod common;

use std::time::{Duration, Instant};

use common::{stub, Reply};
use counterframe::remote::{
    RemoteOracle, RemoteOracleConfig, RemoteRewriter, RemoteRewriterConfig, RetryPolicy, Secret,
};
use counterframe_core::{ClientError, ModificationType, Rewriter, SentimentOracle};
use serde_json::Value;

fn fast_retry(max_retries: u32) -> RetryPolicy {
    RetryPolicy {
        max_retries,
        backoff_ms: 5,
        jitter: false,
    }
}

fn oracle(url: &str, timeout_ms: u64, max_retries: u32) -> RemoteOracle {
    RemoteOracle::new(
        RemoteOracleConfig {
            endpoint: url.to_string(),
            timeout_ms,
            retry: fast_retry(max_retries),
        },
        Some(Secret::new("sk-test-oracle")),
    )
    .unwrap()
}

fn rewriter(url: &str, max_retries: u32) -> RemoteRewriter {
    RemoteRewriter::new(
        RemoteRewriterConfig {
            endpoint: url.to_string(),
            timeout_ms: 2000,
            retry: fast_retry(max_retries),
            ..Default::default()
        },
        Some(Secret::new("sk-test-rewriter")),
    )
    .unwrap()
}

fn tone() -> &'static ModificationType {
    ModificationType::by_key("communication.tone").unwrap()
}

#[test]
fn oracle_happy_path_sends_text_and_key() {
    let s = stub(|_, _| Reply::Json(200, r#"{"p_neg":0.7,"p_neu":0.2,"p_pos":0.1}"#.into()));
    let p = oracle(&s.url, 2000, 3).predict("Talks stalled.").unwrap();
    assert_eq!((p.p_neg, p.p_neu, p.p_pos), (0.7, 0.2, 0.1));
    let req = &s.requests()[0];
    let body: Value = serde_json::from_str(&req.body).unwrap();
    assert_eq!(body, serde_json::json!({"text": "Talks stalled."}));
    assert!(req
        .headers
        .iter()
        .any(|(k, v)| k == "authorization" && v == "Bearer sk-test-oracle"));
}

#[test]
fn oracle_timeout_retries_then_gives_up() {
    let s = stub(|_, _| Reply::Hang(Duration::from_secs(3)));
    let start = Instant::now();
    let err = oracle(&s.url, 150, 3).predict("x").unwrap_err();
    assert!(matches!(err, ClientError::Unavailable { attempts: 4, .. }), "{err:?}");
    assert_eq!(s.count(), 4);
    assert!(start.elapsed() < Duration::from_secs(3));
}

#[test]
fn oracle_retries_server_errors_until_success() {
    let s = stub(|i, _| {
        if i < 2 {
            Reply::Json(503, "{}".into())
        } else {
            Reply::Json(200, r#"{"p_neg":0.1,"p_neu":0.8,"p_pos":0.1}"#.into())
        }
    });
    let p = oracle(&s.url, 2000, 3).predict("x").unwrap();
    assert_eq!(p.p_neu, 0.8);
    assert_eq!(s.count(), 3);
}

#[test]
fn oracle_client_error_is_not_retried() {
    let s = stub(|_, _| Reply::Json(401, r#"{"error":"bad key"}"#.into()));
    let err = oracle(&s.url, 2000, 3).predict("x").unwrap_err();
    match err {
        ClientError::Rejected { status, message } => {
            assert_eq!(status, 401);
            assert!(message.contains("bad key"));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(s.count(), 1);
}

#[test]
fn oracle_bad_payloads_are_protocol_errors() {
    for payload in [
        r#"{"p_neg":0.5,"p_neu":0.5,"p_pos":0.5}"#,
        r#"{"p_neg":-0.1,"p_neu":0.6,"p_pos":0.5}"#,
        r#"{"label":"negative"}"#,
        "not json",
    ] {
        let body = payload.to_string();
        let s = stub(move |_, _| Reply::Json(200, body.clone()));
        let err = oracle(&s.url, 2000, 3).predict("x").unwrap_err();
        assert!(matches!(err, ClientError::Protocol(_)), "{payload}: {err:?}");
        assert_eq!(s.count(), 1);
    }
}

#[test]
fn oracle_describe_hides_key() {
    let o = oracle("http://127.0.0.1:1/v1", 100, 0);
    assert!(!o.describe().contains("sk-test"));
}

#[test]
fn rewriter_request_shape() {
    let s = stub(|_, _| Reply::Json(200, r#"{"text":"Officials spoke warmly at the talks today."}"#.into()));
    let out = rewriter(&s.url, 3)
        .rewrite("Officials spoke harshly at the talks today.", tone())
        .unwrap();
    assert_eq!(out, "Officials spoke warmly at the talks today.");
    let body: Value = serde_json::from_str(&s.requests()[0].body).unwrap();
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["max_tokens"], 1024);
    assert!(body["system"].as_str().unwrap().contains("communication"));
    assert!(body["user"]
        .as_str()
        .unwrap()
        .contains("Officials spoke harshly at the talks today."));
}

#[test]
fn rewriter_reprompts_out_of_band_output() {
    // 7 input tokens: band is [5, 9]
    let s = stub(|i, _| {
        let text = if i == 0 { "Too short." } else { "Officials spoke warmly at the talks." };
        Reply::Json(200, format!(r#"{{"text":"{text}"}}"#))
    });
    let out = rewriter(&s.url, 3)
        .rewrite("Officials spoke harshly at the talks today.", tone())
        .unwrap();
    assert_eq!(out, "Officials spoke warmly at the talks.");
    let reqs = s.requests();
    assert_eq!(reqs.len(), 2);
    let second: Value = serde_json::from_str(&reqs[1].body).unwrap();
    let user = second["user"].as_str().unwrap();
    assert!(user.contains("had 2 words") && user.contains("between 5 and 9"), "{user}");
}

#[test]
fn rewriter_gives_up_out_of_band() {
    let s = stub(|_, _| Reply::Json(200, r#"{"text":"No."}"#.into()));
    let err = rewriter(&s.url, 2)
        .rewrite("Officials spoke harshly at the talks today.", tone())
        .unwrap_err();
    assert_eq!(
        err,
        ClientError::RewriteOutOfBand {
            attempts: 3,
            tokens: 1,
            min: 5,
            max: 9
        }
    );
    assert_eq!(s.count(), 3);
}

#[test]
fn rewriter_empty_completion() {
    let s = stub(|_, _| Reply::Json(200, r#"{"text":"   "}"#.into()));
    let err = rewriter(&s.url, 3).rewrite("Some source text.", tone()).unwrap_err();
    assert_eq!(err, ClientError::RewriteEmpty);
}

#[test]
fn rewriter_empty_source_never_calls_out() {
    let s = stub(|_, _| Reply::Json(200, r#"{"text":"x"}"#.into()));
    let err = rewriter(&s.url, 3).rewrite("  ", tone()).unwrap_err();
    assert!(matches!(err, ClientError::InvalidInput(_)));
    assert_eq!(s.count(), 0);
}
