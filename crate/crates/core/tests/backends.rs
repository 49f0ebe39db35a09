use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use amrfoil::backends::{
    BackendConfig, BackendError, BackendMode, Backends, CachedTransport, FixtureEntry, FixtureTransport,
    HttpTransport, NliLabel, RecordingTransport, Request, Transport,
};
use serde_json::{json, Value};

type Handler = dyn Fn(&str, &Value) -> (u16, Value) + Send + Sync;

/// Minimal HTTP/1.1 server answering JSON POSTs, one connection at a time.
struct MockServer {
    url: String,
    hits: Arc<AtomicUsize>,
}

impl MockServer {
    fn start(handler: Box<Handler>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = Arc::clone(&hits);
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut request_line = String::new();
                reader.read_line(&mut request_line).unwrap();
                let path = request_line.split_whitespace().nth(1).unwrap_or("/").to_string();
                let mut length = 0;
                loop {
                    let mut header = String::new();
                    reader.read_line(&mut header).unwrap();
                    if header.trim().is_empty() {
                        break;
                    }
                    if let Some((name, value)) = header.split_once(':') {
                        if name.eq_ignore_ascii_case("content-length") {
                            length = value.trim().parse().unwrap();
                        }
                    }
                }
                let mut body = vec![0; length];
                reader.read_exact(&mut body).unwrap();
                counter.fetch_add(1, Ordering::SeqCst);
                let body: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
                let (status, reply) = handler(&path, &body);
                let reply = reply.to_string();
                let _ = write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                    reply.len()
                );
            }
        });
        MockServer { url, hits }
    }

    fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

const SNAKE_GRAPH: &str = "(b / bite-01\n    :ARG0 (s / snake)\n    :ARG1 (t / tiger))";

fn model_server() -> MockServer {
    MockServer::start(Box::new(|path, body| match path {
        "/parse" => {
            let graphs: Vec<&str> = body["sentences"].as_array().unwrap().iter().map(|_| SNAKE_GRAPH).collect();
            (200, json!({ "graphs": graphs }))
        }
        "/generate" => {
            let n = body["graphs"].as_array().unwrap().len();
            (200, json!({ "sentences": vec!["The snake doesn't bite the tiger."; n] }))
        }
        "/nli" => {
            let probs: Vec<Value> = body["pairs"]
                .as_array()
                .unwrap()
                .iter()
                .map(|pair| if pair[0] == pair[1] { json!([0.01, 0.03, 0.96]) } else { json!([0.9, 0.08, 0.02]) })
                .collect();
            (200, json!({ "probs": probs }))
        }
        "/embed" => {
            if body["model"] != "toy" {
                return (404, json!({"error": "unknown model"}));
            }
            let vectors: Vec<Value> = body["texts"]
                .as_array()
                .unwrap()
                .iter()
                .map(|t| {
                    let len = t.as_str().unwrap().len() as f32;
                    json!([1.0, len, 0.5])
                })
                .collect();
            (200, json!({ "vectors": vectors }))
        }
        _ => (404, json!({})),
    }))
}

fn http(server: &MockServer) -> Backends {
    let transport = HttpTransport::new(&server.url, Duration::from_secs(5), 2, 8).unwrap();
    Backends::new(Arc::new(transport))
}

#[test]
fn http_round_trip_for_all_endpoints() {
    let server = model_server();
    let backends = http(&server);

    let graph = backends.parse_text("The snake bites the tiger.").unwrap();
    let parsed = amrfoil::penman::parse(&graph).unwrap();
    assert_eq!(parsed.concept(parsed.root()), Some("bite-01"));

    assert_eq!(backends.generate_text(&graph).unwrap(), "The snake doesn't bite the tiger.");

    let verdict = backends.nli_check("a b", "c d").unwrap();
    assert_eq!(verdict.label(), NliLabel::Contradiction);

    let texts = vec!["one".to_string(), "three".to_string()];
    let vectors = backends.embed(&texts, "toy").unwrap();
    assert_eq!(vectors.len(), 2);
    assert_eq!(vectors[0].values.len(), vectors[1].values.len());
    assert_eq!(vectors[1].model_id, "toy");
}

#[test]
fn preconditions_are_checked_before_any_request() {
    let server = model_server();
    let backends = http(&server);
    assert!(matches!(backends.parse_text(""), Err(BackendError::Precondition(_))));
    assert!(matches!(backends.generate_text("(b / bite-01"), Err(BackendError::Precondition(_))));
    assert!(matches!(backends.nli_check("", "x"), Err(BackendError::Precondition(_))));
    assert!(matches!(backends.embed(&[], "toy"), Err(BackendError::Precondition(_))));
    assert_eq!(server.hits(), 0);
}

#[test]
fn unknown_model_is_not_retried() {
    let server = model_server();
    let backends = http(&server);
    let err = backends.embed(&["x".to_string()], "nope").unwrap_err();
    assert!(matches!(err, BackendError::Status { status: 404, .. }), "{err}");
    assert_eq!(server.hits(), 1);
}

#[test]
fn server_errors_are_retried_a_bounded_number_of_times() {
    let server = MockServer::start(Box::new(|_, _| (503, json!({"error": "model not loaded"}))));
    let backends = http(&server);
    let err = backends.nli_check("a", "b").unwrap_err();
    assert!(matches!(err, BackendError::Status { status: 503, .. }));
    assert_eq!(server.hits(), 3);
}

#[test]
fn transient_failure_recovers() {
    let calls = Arc::new(AtomicUsize::new(0));
    let seen = Arc::clone(&calls);
    let server = MockServer::start(Box::new(move |_, _| {
        if seen.fetch_add(1, Ordering::SeqCst) == 0 {
            (500, json!({}))
        } else {
            (200, json!({"probs": [[0.1, 0.2, 0.7]]}))
        }
    }));
    let verdict = http(&server).nli_check("a", "b").unwrap();
    assert_eq!(verdict.label(), NliLabel::Entailment);
    assert_eq!(server.hits(), 2);
}

#[test]
fn invalid_graph_is_requested_again_once() {
    let server = MockServer::start(Box::new(|_, _| (200, json!({"graphs": ["(b / bite-01 :ARG0"]}))));
    let err = http(&server).parse_text("The snake bites.").unwrap_err();
    assert!(matches!(err, BackendError::InvalidGraph(_)));
    assert_eq!(server.hits(), 2);
}

#[test]
fn invalid_probabilities_are_rejected() {
    let server = MockServer::start(Box::new(|_, _| (200, json!({"probs": [[0.5, 0.5, 0.5]]}))));
    let err = http(&server).nli_check("a", "b").unwrap_err();
    assert!(matches!(err, BackendError::InvalidResponse { .. }), "{err}");
}

#[test]
fn empty_generation_is_an_error() {
    let server = MockServer::start(Box::new(|_, _| (200, json!({"sentences": ["  "]}))));
    let err = http(&server).generate_text(SNAKE_GRAPH).unwrap_err();
    assert!(matches!(err, BackendError::EmptyGeneration));
}

#[test]
fn batches_are_split() {
    let server = model_server();
    let backends = http(&server).with_batch_size(2);
    let texts: Vec<String> = (0..5).map(|i| format!("text {i}")).collect();
    assert_eq!(backends.embed(&texts, "toy").unwrap().len(), 5);
    assert_eq!(server.hits(), 3);
}

#[test]
fn symmetric_nli_averages_both_directions() {
    let server = MockServer::start(Box::new(|_, body| {
        let probs: Vec<Value> = body["pairs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|pair| if pair[0] == "a" { json!([0.8, 0.2, 0.0]) } else { json!([0.2, 0.2, 0.6]) })
            .collect();
        (200, json!({ "probs": probs }))
    }));
    let verdict = http(&server).with_nli_symmetric(true).nli_check("a", "b").unwrap();
    assert!((verdict.probs()[0] - 0.5).abs() < 1e-9);
    assert!((verdict.probs()[2] - 0.3).abs() < 1e-9);
}

#[test]
fn recording_then_replay_is_byte_exact() {
    let server = model_server();
    let dir = tempfile::tempdir().unwrap();
    let fixtures = dir.path().join("fixtures.jsonl");
    let live = HttpTransport::new(&server.url, Duration::from_secs(5), 0, 8).unwrap();
    let recorder = Backends::new(Arc::new(RecordingTransport::new(live, &fixtures).unwrap()));

    let graph = recorder.parse_text("The snake bites the tiger.").unwrap();
    let sentence = recorder.generate_text(&graph).unwrap();
    let verdict = recorder.nli_check("x y", "x y").unwrap();
    let vectors = recorder.embed(&["z".to_string()], "toy").unwrap();
    // A repeated request is not written twice.
    recorder.nli_check("x y", "x y").unwrap();
    let lines = std::fs::read_to_string(&fixtures).unwrap();
    assert_eq!(lines.lines().count(), 4);
    let first: FixtureEntry = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    assert_eq!(first.request_hash.len(), 64);

    let replay = Backends::new(Arc::new(FixtureTransport::load(&fixtures).unwrap()));
    let hits = server.hits();
    assert_eq!(replay.parse_text("The snake bites the tiger.").unwrap(), graph);
    assert_eq!(replay.generate_text(&graph).unwrap(), sentence);
    assert_eq!(replay.nli_check("x y", "x y").unwrap(), verdict);
    assert_eq!(replay.embed(&["z".to_string()], "toy").unwrap(), vectors);
    assert_eq!(server.hits(), hits);

    let miss = replay.nli_check("never", "seen").unwrap_err();
    assert!(matches!(miss, BackendError::FixtureMiss { .. }));
}

#[test]
fn config_builds_fixture_backends() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.jsonl");
    let request = Request::Generate { graph: SNAKE_GRAPH.into() };
    let entry = FixtureEntry::new(&request, json!("The snake bites the tiger."));
    std::fs::write(&path, serde_json::to_string(&entry).unwrap() + "\n").unwrap();
    let config = BackendConfig { mode: BackendMode::Fixture, fixtures: Some(path), ..Default::default() };
    let backends = config.connect().unwrap();
    assert_eq!(backends.generate_text(SNAKE_GRAPH).unwrap(), "The snake bites the tiger.");

    let missing = BackendConfig { mode: BackendMode::Fixture, ..Default::default() };
    assert!(matches!(missing.connect(), Err(BackendError::Config(_))));
}

struct Counting(AtomicUsize, FixtureTransport);

impl Transport for Counting {
    fn send(&self, batch: &[Request]) -> Result<Vec<Value>, BackendError> {
        self.0.fetch_add(batch.len(), Ordering::SeqCst);
        self.1.send(batch)
    }
}

#[test]
fn disk_cache_answers_repeated_requests() {
    let requests: Vec<Request> =
        (0..20).map(|i| Request::Embed { text: format!("t{i}"), model: "toy".into() }).collect();
    let inner = Arc::new(Counting(
        AtomicUsize::new(0),
        FixtureTransport::from_entries(requests.iter().map(|r| FixtureEntry::new(r, json!([1.0, 2.0])))),
    ));
    let dir = tempfile::tempdir().unwrap();
    let cache = Arc::new(CachedTransport::new(Arc::clone(&inner), dir.path()).unwrap());

    std::thread::scope(|scope| {
        for _ in 0..8 {
            let cache = Arc::clone(&cache);
            let requests = &requests;
            scope.spawn(move || {
                let answers = cache.send(requests).unwrap();
                assert_eq!(answers.len(), 20);
            });
        }
    });
    let after_concurrent = inner.0.load(Ordering::SeqCst);
    assert!(after_concurrent >= 20);

    // Fully warm now: a fresh cache handle over the same directory does not
    // touch the inner transport.
    let cache = CachedTransport::new(Arc::clone(&inner), dir.path()).unwrap();
    let answers = cache.send(&requests).unwrap();
    assert!(answers.iter().all(|a| a == &json!([1.0, 2.0])));
    assert_eq!(inner.0.load(Ordering::SeqCst), after_concurrent);
    let leftovers = walk(dir.path()).into_iter().filter(|p| p.ends_with(".tmp")).count();
    assert_eq!(leftovers, 0);
}

fn walk(dir: &std::path::Path) -> Vec<String> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path.display().to_string());
        }
    }
    out
}
