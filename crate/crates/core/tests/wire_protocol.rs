mod common;

use std::time::Duration;

use serde_json::{json, Value};

use common::MockServer;
use taxoforge::relation::{HeuristicScorer, Mention, RelationClass, RelationScorer, RemoteScorer, StatementText};
use taxoforge::Error;

fn statement(text: &str, a: usize, b: usize) -> StatementText {
    StatementText {
        tokens: text.split(' ').map(str::to_string).collect(),
        pos_a: a,
        pos_b: b,
    }
}

fn fast(url: &str) -> RemoteScorer {
    RemoteScorer::new(url).with_retry(2, Duration::from_millis(5))
}

/// Answers `/score` with one-hot distributions encoding `pos_a` so order can
/// be checked: even → forward, odd → backward.
fn echo_score(req: &common::Request) -> (u16, String) {
    let body: Value = serde_json::from_str(&req.body).unwrap();
    let dists: Vec<Value> = body["statements"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| {
            if s["pos_a"].as_u64().unwrap() % 2 == 0 {
                json!([1.0, 0.0, 0.0])
            } else {
                json!([0.0, 1.0, 0.0])
            }
        })
        .collect();
    (200, json!({ "distributions": dists }).to_string())
}

#[test]
fn score_request_shape_and_order() {
    let server = MockServer::start(|req, _| {
        assert_eq!((req.method.as_str(), req.path.as_str()), ("POST", "/score"));
        echo_score(req)
    });
    let statements: Vec<_> = (0..7).map(|i| statement("x y z w v u t s", i, 7)).collect();
    let out = fast(&server.url).with_batch_size(3).score_batch(&statements).unwrap();
    assert_eq!(out.len(), 7);
    for (i, d) in out.iter().enumerate() {
        let want = if i % 2 == 0 { RelationClass::Forward } else { RelationClass::Backward };
        assert_eq!(d.argmax(), want, "statement {i}");
    }
    // 7 statements in batches of 3
    assert_eq!(server.hits(), 3);
    let log = server.log.lock().unwrap();
    let first: Value = serde_json::from_str(&log[0].2).unwrap();
    assert_eq!(
        first,
        json!({"statements": [
            {"tokens": ["x","y","z","w","v","u","t","s"], "pos_a": 0, "pos_b": 7},
            {"tokens": ["x","y","z","w","v","u","t","s"], "pos_a": 1, "pos_b": 7},
            {"tokens": ["x","y","z","w","v","u","t","s"], "pos_a": 2, "pos_b": 7}
        ]})
    );
}

#[test]
fn shuffled_large_batch_keeps_order() {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let server = MockServer::start(|req, _| echo_score(req));
    let mut positions: Vec<usize> = (0..256).collect();
    positions.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(3));
    let tokens = vec!["t".to_string(); 300];
    let statements: Vec<_> = positions
        .iter()
        .map(|&p| StatementText { tokens: tokens.clone(), pos_a: p, pos_b: 299 })
        .collect();
    let out = fast(&server.url).score_batch(&statements).unwrap();
    for (p, d) in positions.iter().zip(&out) {
        let sum: f64 = d.probs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-6);
        assert_eq!(d.argmax() == RelationClass::Forward, p % 2 == 0);
    }
}

#[test]
fn embed_and_health_handshake() {
    let server = MockServer::start(|req, _| match req.path.as_str() {
        "/health" => (200, json!({"status": "ok", "model": "mock", "dim": 3}).to_string()),
        "/embed" => {
            let body: Value = serde_json::from_str(&req.body).unwrap();
            assert_eq!(body["term"], "apple");
            let n = body["mentions"].as_array().unwrap().len() as f64;
            (200, json!({"vector": [n, 0.5, -1.0], "dim": 3}).to_string())
        }
        _ => (404, json!({"error": "no route", "code": 404}).to_string()),
    });
    let r = fast(&server.url);
    let health = r.health().unwrap();
    assert_eq!((health.status.as_str(), health.model.as_str(), health.dim), ("ok", "mock", 3));
    let mentions = vec![
        Mention { tokens: vec!["an".into(), "apple".into()], pos: 1 },
        Mention { tokens: vec!["apple".into(), "pie".into()], pos: 0 },
    ];
    let v = r.embed_term("apple", &mentions).unwrap().unwrap();
    assert_eq!(v, vec![2.0, 0.5, -1.0]);
    assert_eq!(v.len(), health.dim);
    let log = server.log.lock().unwrap();
    let sent: Value = serde_json::from_str(&log[1].2).unwrap();
    assert_eq!(sent["mentions"][0], json!({"tokens": ["an", "apple"], "pos": 1}));
}

#[test]
fn embed_dim_mismatch_is_protocol_error() {
    let server = MockServer::start(|_, _| (200, json!({"vector": [1.0, 2.0], "dim": 3}).to_string()));
    let err = fast(&server.url).embed_term("a", &[]).unwrap_err();
    assert!(matches!(err, Error::Protocol { .. }), "{err:?}");
}

#[test]
fn model_not_loaded_is_not_retried() {
    let server = MockServer::start(|_, _| (409, json!({"error": "model not loaded", "code": 409}).to_string()));
    match fast(&server.url).score_batch(&[statement("a b", 0, 1)]) {
        Err(Error::Protocol { code, message }) => {
            assert_eq!(code, 409);
            assert_eq!(message, "model not loaded");
        }
        other => panic!("expected protocol error, got {other:?}"),
    }
    assert_eq!(server.hits(), 1);
}

#[test]
fn server_errors_are_retried_then_succeed() {
    let server = MockServer::start(|req, n| if n < 2 { (503, "{}".into()) } else { echo_score(req) });
    let out = fast(&server.url).score_batch(&[statement("a b", 0, 1)]).unwrap();
    assert_eq!(out[0].argmax(), RelationClass::Forward);
    assert_eq!(server.hits(), 3);
}

#[test]
fn persistent_server_errors_become_transport_errors() {
    let server = MockServer::start(|_, _| (500, "boom".into()));
    match fast(&server.url).score_batch(&[statement("a b", 0, 1)]) {
        Err(Error::Transport { retries, message }) => {
            assert_eq!(retries, 2);
            assert!(message.contains("500"));
        }
        other => panic!("expected transport error, got {other:?}"),
    }
    assert_eq!(server.hits(), 3);
}

#[test]
fn wrong_count_or_invalid_distribution_is_protocol_error() {
    let short = MockServer::start(|_, _| (200, json!({"distributions": [[1.0, 0.0, 0.0]]}).to_string()));
    let two = [statement("a b", 0, 1), statement("a b", 1, 0)];
    assert!(matches!(fast(&short.url).score_batch(&two), Err(Error::Protocol { .. })));

    let off_simplex = MockServer::start(|_, _| (200, json!({"distributions": [[0.5, 0.5, 0.5]]}).to_string()));
    assert!(matches!(
        fast(&off_simplex.url).score_batch(&two[..1]),
        Err(Error::Protocol { .. })
    ));

    let garbage = MockServer::start(|_, _| (200, "not json".into()));
    assert!(matches!(fast(&garbage.url).health(), Err(Error::Protocol { .. })));
}

#[test]
fn trailing_slash_in_base_url() {
    let server = MockServer::start(|req, _| {
        assert_eq!(req.path, "/health");
        (200, json!({"status": "ok", "model": "m", "dim": 1}).to_string())
    });
    fast(&format!("{}/", server.url)).health().unwrap();
}

/// A service that answers with the pattern heuristic drives the whole
/// pipeline through the remote backend.
#[test]
fn pipeline_over_remote_backend() {
    let server = MockServer::start(|req, _| match req.path.as_str() {
        "/health" => (200, json!({"status": "ok", "model": "rules", "dim": 4}).to_string()),
        "/score" => {
            let body: Value = serde_json::from_str(&req.body).unwrap();
            let statements: Vec<StatementText> = serde_json::from_value(body["statements"].clone()).unwrap();
            let dists: Vec<[f64; 3]> = HeuristicScorer.score_batch(&statements).unwrap().iter().map(|d| d.probs()).collect();
            (200, json!({ "distributions": dists }).to_string())
        }
        "/embed" => {
            let body: Value = serde_json::from_str(&req.body).unwrap();
            let term = body["term"].as_str().unwrap();
            let h = term.bytes().fold(7u64, |a, b| a.wrapping_mul(31).wrapping_add(b as u64));
            let v: Vec<f64> = (0..4).map(|i| ((h >> (i * 8)) & 0xff) as f64 / 255.0).collect();
            (200, json!({"vector": v, "dim": 4}).to_string())
        }
        _ => (404, json!({"error": "no route", "code": 404}).to_string()),
    });
    let dir = tempfile::tempdir().unwrap();
    let config = common::synthetic_workspace(dir.path(), "heuristic");
    let text = std::fs::read_to_string(&config).unwrap().replace(
        "kind = \"heuristic\"",
        &format!("kind = \"remote\"\nurl = \"{}\"\ntrain_command = \"test -s \\\"$TAXOFORGE_RELSET\\\"\"", server.url),
    );
    assert!(text.contains("remote"), "config layout changed:\n{text}");
    std::fs::write(&config, text).unwrap();
    let cfg = taxoforge::pipeline::RunConfig::load(&config).unwrap();
    let out = taxoforge::pipeline::run(&cfg).unwrap();
    assert!(out.taxonomy.len() > 6, "{}", out.report.to_text());
    let log = server.log.lock().unwrap();
    assert!(log.iter().any(|(_, p, _)| p == "/health"));
    assert!(log.iter().any(|(_, p, _)| p == "/score"));
    assert!(log.iter().any(|(_, p, _)| p == "/embed"));
}
