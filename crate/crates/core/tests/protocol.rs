//! The embedding wire protocol, exercised over real sockets.

use std::thread;
use std::time::{Duration, Instant};

use fxsearcher::audio::AudioBuffer;
use fxsearcher::score::{
    audio_features, hashed_text_vector, BackendError, BackendServer, EmbeddingBackend, HttpBackend, PromptPair,
    RetryPolicy, Scorer, TestBackend,
};
use reqwest::blocking::Client;
use serde_json::{json, Value};

fn fast_retry() -> RetryPolicy {
    RetryPolicy { delays: vec![Duration::from_millis(50); 3] }
}

fn serve() -> BackendServer {
    BackendServer::start(TestBackend::new(), "127.0.0.1:0").unwrap()
}

fn tone(len: usize, rate: f64) -> Vec<f32> {
    (0..len).map(|i| (0.3 * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / rate).sin()) as f32).collect()
}

#[test]
fn client_matches_in_process_backend() {
    let server = serve();
    let http = HttpBackend::with_retry(server.url(), fast_retry()).unwrap();
    let local = TestBackend::new();

    assert_eq!(http.info().unwrap(), local.info().unwrap());
    let texts = vec!["bright".to_string(), "a dark rumble".to_string()];
    assert_eq!(http.embed_texts(&texts).unwrap(), local.embed_texts(&texts).unwrap());
    let pcm = tone(24_000, 48_000.0);
    assert_eq!(http.embed_audio(&pcm, 48_000).unwrap(), local.embed_audio(&pcm, 48_000).unwrap());
}

#[test]
fn scorer_over_http_equals_scorer_in_process() {
    let server = serve();
    let remote = Scorer::new(HttpBackend::with_retry(server.url(), fast_retry()).unwrap()).unwrap();
    let local = Scorer::new(TestBackend::new()).unwrap();
    let audio = AudioBuffer::mono(tone(22_050, 44_100.0).iter().map(|&s| s as f64).collect(), 44_100).unwrap();
    let prompts = PromptPair::new("bright");
    let a = remote.score_audio(&audio, &remote.embed_prompts(&prompts).unwrap()).unwrap();
    let b = local.score_audio(&audio, &local.embed_prompts(&prompts).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn golden_request_response_bodies() {
    let server = serve();
    let client = Client::new();
    let base = server.url();

    let info: Value = client.get(format!("{base}/v1/info")).send().unwrap().json().unwrap();
    assert_eq!(
        info,
        json!({"embedding_dim": 16, "sample_rate": 48000, "model_id": "builtin-test/features-16@48000"})
    );

    let resp = client
        .post(format!("{base}/v1/embed/text"))
        .body(r#"{"texts": ["bright"]}"#)
        .header("Content-Type", "application/json")
        .send()
        .unwrap();
    assert_eq!(resp.status().as_u16(), 200);
    let body: Value = resp.json().unwrap();
    let expected: Vec<f64> = hashed_text_vector("bright").to_vec();
    assert_eq!(body, json!({ "embeddings": [expected] }));

    // 1.0f32 and -0.5f32 little-endian, base64.
    let resp = client
        .post(format!("{base}/v1/embed/audio"))
        .body(r#"{"sample_rate": 48000, "audio_b64": "AACAPwAAAL8="}"#)
        .send()
        .unwrap();
    assert_eq!(resp.status().as_u16(), 200);
    let body: Value = resp.json().unwrap();
    let expected: Vec<f64> = audio_features(&[1.0, -0.5], 48_000).to_vec();
    assert_eq!(body, json!({ "embedding": expected }));
}

#[test]
fn error_statuses_and_bodies() {
    let server = serve();
    let client = Client::new();
    let base = server.url();
    let check = |resp: reqwest::blocking::Response, status: u16| {
        assert_eq!(resp.status().as_u16(), status);
        let body: Value = resp.json().unwrap();
        assert!(body["error"].as_str().is_some_and(|s| !s.is_empty()), "{body}");
    };
    check(client.post(format!("{base}/v1/embed/text")).body("{not json").send().unwrap(), 400);
    check(client.post(format!("{base}/v1/embed/text")).body(r#"{"texts": [""]}"#).send().unwrap(), 400);
    check(
        client
            .post(format!("{base}/v1/embed/audio"))
            .body(r#"{"sample_rate": 48000, "audio_b64": "%%%"}"#)
            .send()
            .unwrap(),
        400,
    );
    // three bytes: not a whole float
    check(
        client
            .post(format!("{base}/v1/embed/audio"))
            .body(r#"{"sample_rate": 48000, "audio_b64": "AAAA"}"#)
            .send()
            .unwrap(),
        400,
    );
    check(
        client
            .post(format!("{base}/v1/embed/audio"))
            .body(r#"{"sample_rate": 16000, "audio_b64": "AACAPw=="}"#)
            .send()
            .unwrap(),
        400,
    );
    check(client.get(format!("{base}/v2/nothing")).send().unwrap(), 404);
    check(client.get(format!("{base}/v1/embed/text")).send().unwrap(), 405);
}

#[test]
fn rejected_requests_are_not_retried() {
    let server = serve();
    let http = HttpBackend::with_retry(server.url(), RetryPolicy { delays: vec![Duration::from_secs(5); 3] }).unwrap();
    let start = Instant::now();
    match http.embed_audio(&[0.0; 8], 16_000) {
        Err(BackendError::Rejected { status: 400, message }) => assert!(message.contains("48000")),
        other => panic!("expected 400, got {other:?}"),
    }
    assert!(start.elapsed() < Duration::from_secs(2));
}

#[test]
fn retries_while_model_loading() {
    let server = serve();
    server.set_ready(false);
    let http = HttpBackend::with_retry(
        server.url(),
        RetryPolicy { delays: vec![Duration::from_millis(200), Duration::from_millis(400), Duration::from_millis(800)] },
    )
    .unwrap();
    thread::scope(|s| {
        s.spawn(|| {
            thread::sleep(Duration::from_millis(300));
            server.set_ready(true);
        });
        let info = http.info().unwrap();
        assert_eq!(info.embedding_dim, 16);
    });
}

#[test]
fn gives_up_after_three_retries() {
    let server = serve();
    server.set_ready(false);
    let http = HttpBackend::with_retry(server.url(), fast_retry()).unwrap();
    let start = Instant::now();
    match http.info() {
        Err(BackendError::Transport { attempts, message }) => {
            assert_eq!(attempts, 4);
            assert!(message.contains("unavailable"), "{message}");
        }
        other => panic!("expected transport error, got {other:?}"),
    }
    assert!(start.elapsed() >= Duration::from_millis(150));
}

#[test]
fn repeated_audio_posts_are_identical() {
    let server = serve();
    let http = HttpBackend::with_retry(server.url(), fast_retry()).unwrap();
    let pcm = tone(48_000, 48_000.0);
    let a = http.embed_audio(&pcm, 48_000).unwrap();
    let b = http.embed_audio(&pcm, 48_000).unwrap();
    assert_eq!(a, b);
}
