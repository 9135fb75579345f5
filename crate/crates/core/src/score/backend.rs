use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `GET /v1/info` payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendInfo {
    pub embedding_dim: usize,
    pub sample_rate: u32,
    pub model_id: String,
}

#[derive(Debug, Error)]
pub enum BackendError {
    /// The backend could not be reached (or kept answering 503) after
    /// every retry.
    #[error("backend unreachable after {attempts} attempts: {message}")]
    Transport { attempts: usize, message: String },
    /// The backend answered with something that does not follow the protocol.
    #[error("backend protocol error: {0}")]
    Protocol(String),
    /// The backend refused the request (HTTP 4xx/5xx other than 503).
    #[error("backend rejected request ({status}): {message}")]
    Rejected { status: u16, message: String },
}

/// Source of text and audio embeddings.
///
/// Implementations must be deterministic: identical inputs give identical
/// vectors. They may be called from several threads at once.
pub trait EmbeddingBackend: Send + Sync {
    fn info(&self) -> Result<BackendInfo, BackendError>;

    /// One vector per input text, in order.
    fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError>;

    /// Embeds mono float PCM at `sample_rate`.
    fn embed_audio(&self, pcm: &[f32], sample_rate: u32) -> Result<Vec<f64>, BackendError>;
}

impl<B: EmbeddingBackend + ?Sized> EmbeddingBackend for Box<B> {
    fn info(&self) -> Result<BackendInfo, BackendError> {
        (**self).info()
    }

    fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        (**self).embed_texts(texts)
    }

    fn embed_audio(&self, pcm: &[f32], sample_rate: u32) -> Result<Vec<f64>, BackendError> {
        (**self).embed_audio(pcm, sample_rate)
    }
}

impl<B: EmbeddingBackend + ?Sized> EmbeddingBackend for std::sync::Arc<B> {
    fn info(&self) -> Result<BackendInfo, BackendError> {
        (**self).info()
    }

    fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        (**self).embed_texts(texts)
    }

    fn embed_audio(&self, pcm: &[f32], sample_rate: u32) -> Result<Vec<f64>, BackendError> {
        (**self).embed_audio(pcm, sample_rate)
    }
}
