use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

use sentimt::sentiment::{external_score, ExternalScorer, ExternalScorerConfig, ScoreError, SentenceScorer};

#[derive(Clone, Default)]
struct Seen {
    keys: Arc<Mutex<Vec<Option<String>>>>,
}

async fn analyze(State(seen): State<Seen>, headers: HeaderMap, Json(body): Json<Value>) -> (StatusCode, Json<Value>) {
    let key = headers.get("Ocp-Apim-Subscription-Key").and_then(|v| v.to_str().ok()).map(String::from);
    seen.keys.lock().unwrap().push(key);
    let mut docs = Vec::new();
    for d in body["documents"].as_array().unwrap() {
        let id = d["id"].clone();
        let doc = match d["text"].as_str().unwrap() {
            "fail" => return (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({"error": "boom"}))),
            "nested" => json!({"id": id, "confidenceScores": {"positive": 0.1, "neutral": 0.2, "negative": 0.7}}),
            "unnormalized" => json!({"id": id, "positive": 0.5, "neutral": 0.5, "negative": 0.5}),
            "malformed" => json!({"id": id, "positive": "high"}),
            _ => json!({"id": id, "positive": 0.98, "neutral": 0.01, "negative": 0.01}),
        };
        docs.push(doc);
    }
    // reversed on purpose: the client must match by id, not position
    docs.reverse();
    (StatusCode::OK, Json(json!({ "documents": docs })))
}

fn spawn_mock() -> (SocketAddr, Seen) {
    let seen = Seen::default();
    let state = seen.clone();
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(1).enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            let app = Router::new().route("/sentiment", post(analyze)).with_state(state);
            axum::serve(listener, app).await.unwrap();
        });
    });
    (rx.recv().unwrap(), seen)
}

fn client(addr: SocketAddr, key: Option<&str>, strict: Option<f64>) -> ExternalScorer {
    let mut cfg = ExternalScorerConfig::new(format!("http://{addr}/sentiment"));
    cfg.key = key.map(String::from);
    cfg.strict_sum_tolerance = strict;
    ExternalScorer::new(cfg).unwrap()
}

#[test]
fn passes_valid_scores_through_and_sends_key() {
    let (addr, seen) = spawn_mock();
    let s = external_score("the novel is great", &client(addr, Some("secret"), None)).unwrap();
    assert_eq!((s.positive, s.neutral, s.negative), (0.98, 0.01, 0.01));
    assert_eq!(seen.keys.lock().unwrap().as_slice(), [Some("secret".to_string())]);
}

#[test]
fn batch_matches_documents_by_id() {
    let (addr, _) = spawn_mock();
    let scores = client(addr, None, None).score_batch(&["plain", "nested"]).unwrap();
    assert_eq!(scores[0].positive, 0.98);
    assert_eq!(scores[1].negative, 0.7);
}

#[test]
fn renormalizes_by_default_and_rejects_in_strict_mode() {
    let (addr, _) = spawn_mock();
    let s = client(addr, None, None).score("unnormalized").unwrap();
    for v in [s.positive, s.neutral, s.negative] {
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }
    assert!(matches!(client(addr, None, Some(0.01)).score("unnormalized"), Err(ScoreError::Schema(_))));
}

#[test]
fn server_error_is_surfaced() {
    let (addr, _) = spawn_mock();
    assert!(matches!(client(addr, None, None).score("fail"), Err(ScoreError::Status(500))));
    assert!(matches!(client(addr, None, None).score("malformed"), Err(ScoreError::Schema(_))));
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    assert!(matches!(client(addr, None, None).score("x"), Err(ScoreError::Transport(_))));
}
