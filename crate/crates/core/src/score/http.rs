//! Client for the embedding service wire protocol.
//!
//! ```text
//! GET  /v1/info        -> {"embedding_dim": int, "sample_rate": int, "model_id": str}
//! POST /v1/embed/text  {"texts": [str]}                         -> {"embeddings": [[float]]}
//! POST /v1/embed/audio {"sample_rate": int, "audio_b64": str}   -> {"embedding": [float]}
//! ```
//!
//! Audio travels as base64 of little-endian float-32 mono PCM. Errors come
//! back as `{"error": str}` with status 400 (bad request) or 503 (model
//! still loading).

use std::thread;
use std::time::Duration;

use base64::Engine;
use reqwest::blocking::{Client, RequestBuilder};
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use super::backend::{BackendError, BackendInfo, EmbeddingBackend};

/// Delays between attempts; the number of retries is `delays.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub delays: Vec<Duration>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            delays: vec![Duration::from_millis(500), Duration::from_secs(1), Duration::from_secs(2)],
        }
    }
}

#[derive(Serialize)]
pub(crate) struct TextRequest<'a> {
    pub texts: &'a [String],
}

#[derive(Deserialize, Serialize)]
pub(crate) struct TextResponse {
    pub embeddings: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct AudioRequest {
    pub sample_rate: u32,
    pub audio_b64: String,
}

#[derive(Deserialize, Serialize)]
pub(crate) struct AudioResponse {
    pub embedding: Vec<f64>,
}

#[derive(Deserialize, Serialize)]
pub(crate) struct ErrorResponse {
    pub error: String,
}

pub(crate) fn encode_pcm(pcm: &[f32]) -> String {
    let bytes: Vec<u8> = pcm.iter().flat_map(|s| s.to_le_bytes()).collect();
    base64::engine::general_purpose::STANDARD.encode(bytes)
}

pub(crate) fn decode_pcm(b64: &str) -> Result<Vec<f32>, String> {
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(b64.trim())
        .map_err(|e| format!("audio_b64 is not valid base64: {e}"))?;
    if bytes.len() % 4 != 0 {
        return Err(format!(
            "audio_b64 decodes to {} bytes, not a whole number of float-32 samples",
            bytes.len()
        ));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect())
}

pub struct HttpBackend {
    base_url: String,
    client: Client,
    retry: RetryPolicy,
}

impl HttpBackend {
    pub fn new(base_url: impl Into<String>) -> Result<Self, BackendError> {
        Self::with_retry(base_url, RetryPolicy::default())
    }

    pub fn with_retry(base_url: impl Into<String>, retry: RetryPolicy) -> Result<Self, BackendError> {
        let client = Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| BackendError::Transport { attempts: 0, message: e.to_string() })?;
        Ok(Self { base_url: base_url.into().trim_end_matches('/').to_string(), client, retry })
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base_url)
    }

    fn call<R: for<'de> Deserialize<'de>>(&self, build: impl Fn() -> RequestBuilder) -> Result<R, BackendError> {
        let attempts = self.retry.delays.len() + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                thread::sleep(self.retry.delays[attempt - 1]);
            }
            let resp = match build().send() {
                Ok(r) => r,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            let status = resp.status();
            let body = match resp.bytes() {
                Ok(b) => b,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            if status == StatusCode::SERVICE_UNAVAILABLE {
                last = "service unavailable (model loading)".into();
                continue;
            }
            if !status.is_success() {
                let message = serde_json::from_slice::<ErrorResponse>(&body)
                    .map(|e| e.error)
                    .unwrap_or_else(|_| String::from_utf8_lossy(&body).into_owned());
                return Err(BackendError::Rejected { status: status.as_u16(), message });
            }
            return serde_json::from_slice(&body)
                .map_err(|e| BackendError::Protocol(format!("malformed response: {e}")));
        }
        Err(BackendError::Transport { attempts, message: last })
    }
}

impl EmbeddingBackend for HttpBackend {
    fn info(&self) -> Result<BackendInfo, BackendError> {
        self.call(|| self.client.get(self.url("/v1/info")))
    }

    fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        let resp: TextResponse =
            self.call(|| self.client.post(self.url("/v1/embed/text")).json(&TextRequest { texts }))?;
        if resp.embeddings.len() != texts.len() {
            return Err(BackendError::Protocol(format!(
                "sent {} texts, received {} embeddings",
                texts.len(),
                resp.embeddings.len()
            )));
        }
        Ok(resp.embeddings)
    }

    fn embed_audio(&self, pcm: &[f32], sample_rate: u32) -> Result<Vec<f64>, BackendError> {
        let req = AudioRequest { sample_rate, audio_b64: encode_pcm(pcm) };
        let resp: AudioResponse = self.call(|| self.client.post(self.url("/v1/embed/audio")).json(&req))?;
        Ok(resp.embedding)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pcm_base64_round_trip() {
        let pcm = [0.0f32, -1.0, 0.5, 1.7, f32::MIN_POSITIVE];
        assert_eq!(decode_pcm(&encode_pcm(&pcm)).unwrap(), pcm);
        // 1.0f32 little-endian is 00 00 80 3f.
        assert_eq!(encode_pcm(&[1.0]), "AACAPw==");
    }

    #[test]
    fn decode_rejects_partial_samples() {
        let b64 = base64::engine::general_purpose::STANDARD.encode([1u8, 2, 3, 4, 5, 6]);
        assert!(decode_pcm(&b64).unwrap_err().contains("6 bytes"));
        assert!(decode_pcm("not base64!").is_err());
    }

    #[test]
    fn unreachable_after_retries() {
        let policy = RetryPolicy { delays: vec![Duration::from_millis(1); 3] };
        // Port 9 (discard) on localhost is closed in the test environment.
        let backend = HttpBackend::with_retry("http://127.0.0.1:9", policy).unwrap();
        match backend.info() {
            Err(BackendError::Transport { attempts, .. }) => assert_eq!(attempts, 4),
            other => panic!("expected transport error, got {other:?}"),
        }
    }

    #[test]
    fn default_backoff_schedule() {
        let d = RetryPolicy::default().delays;
        assert_eq!(d, vec![Duration::from_millis(500), Duration::from_millis(1000), Duration::from_millis(2000)]);
    }
}
