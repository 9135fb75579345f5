//! Text/audio embedding similarity scoring.
//!
//! A candidate's score is `s_final = s_target - s_guide`, where each term is
//! the cosine similarity between the candidate's audio embedding and a
//! prompt embedding. Embeddings come from an [`EmbeddingBackend`]: either
//! the built-in deterministic [`TestBackend`] or a remote service spoken to
//! over HTTP with [`HttpBackend`].

mod backend;
mod http;
mod server;
mod test_backend;

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::audio::{downmix_mono, resample, AudioBuffer};
use crate::Scalar;

pub use backend::{BackendError, BackendInfo, EmbeddingBackend};
pub use http::{HttpBackend, RetryPolicy};
pub use server::BackendServer;
pub use test_backend::{audio_features, hashed_text_vector, TestBackend, TEST_BACKEND_DIM};

/// Prompt describing the artifacts a transformation should avoid.
pub const DEFAULT_GUIDE_PROMPT: &str =
    "A harsh, distorted, muddy, unclear, oversaturated, unpleasant sound.";

/// Two scorings of identical audio that differ by more than this are
/// reported as a backend determinism violation.
pub const FLAKY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),
}

/// A finite, non-zero embedding vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
    norm: f64,
}

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self, ScoreError> {
        if values.is_empty() {
            return Err(ScoreError::InvalidEmbedding("empty vector".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ScoreError::InvalidEmbedding(format!("non-finite entry at {i}")));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(ScoreError::InvalidEmbedding("zero vector".into()));
        }
        Ok(Self { values, norm })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn scaled(&self, c: f64) -> Result<Self, ScoreError> {
        Self::new(self.values.iter().map(|v| v * c).collect())
    }
}

/// `a·b / (|a| |b|)` over raw slices; zero if either has zero norm.
pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> T {
    let (mut dot, mut na, mut nb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    let denom = na.sqrt() * nb.sqrt();
    if denom == T::zero() {
        return T::zero();
    }
    (dot / denom).max(-T::one()).min(T::one())
}

pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f64, ScoreError> {
    if a.dim() != b.dim() {
        return Err(ScoreError::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok((dot / (a.norm * b.norm)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub s_target: f64,
    pub s_guide: f64,
    pub s_final: f64,
}

impl ScoreBreakdown {
    pub fn new(s_target: f64, s_guide: f64) -> Self {
        Self { s_target, s_guide, s_final: s_target - s_guide }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptPair {
    pub target_prompt: String,
    pub guide_prompt: String,
    pub guide_enabled: bool,
}

impl PromptPair {
    pub fn new(target: impl Into<String>) -> Self {
        Self {
            target_prompt: target.into(),
            guide_prompt: DEFAULT_GUIDE_PROMPT.to_string(),
            guide_enabled: true,
        }
    }

    pub fn without_guide(mut self) -> Self {
        self.guide_enabled = false;
        self
    }
}

/// Prompt embeddings computed once per run.
#[derive(Debug, Clone)]
pub struct EmbeddedPrompts {
    pub target: Embedding,
    pub guide: Option<Embedding>,
}

/// Scores audio against prompts through a backend, caching text embeddings.
pub struct Scorer<B> {
    backend: B,
    info: BackendInfo,
    text_cache: Mutex<HashMap<String, Embedding>>,
    seen_audio: Mutex<HashMap<[u8; 32], Vec<f64>>>,
    flaky: Mutex<Vec<String>>,
}

impl<B: EmbeddingBackend> Scorer<B> {
    /// Queries the backend's `info` once and keeps it for the run.
    pub fn new(backend: B) -> Result<Self, ScoreError> {
        let info = backend.info()?;
        if info.embedding_dim == 0 || info.sample_rate == 0 {
            return Err(BackendError::Protocol(format!("unusable backend info {info:?}")).into());
        }
        Ok(Self {
            backend,
            info,
            text_cache: Mutex::new(HashMap::new()),
            seen_audio: Mutex::new(HashMap::new()),
            flaky: Mutex::new(Vec::new()),
        })
    }

    pub fn info(&self) -> &BackendInfo {
        &self.info
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    fn checked(&self, values: Vec<f64>) -> Result<Embedding, ScoreError> {
        if values.len() != self.info.embedding_dim {
            return Err(BackendError::Protocol(format!(
                "backend returned {} values, advertised {}",
                values.len(),
                self.info.embedding_dim
            ))
            .into());
        }
        Embedding::new(values).map_err(|e| BackendError::Protocol(e.to_string()).into())
    }

    /// Embeds a prompt, serving repeats from the per-process cache.
    pub fn embed_text(&self, prompt: &str) -> Result<Embedding, ScoreError> {
        if prompt.trim().is_empty() {
            return Err(ScoreError::Precondition("prompt must be non-empty".into()));
        }
        if let Some(e) = self.text_cache.lock().unwrap().get(prompt) {
            return Ok(e.clone());
        }
        let mut out = self.backend.embed_texts(&[prompt.to_string()])?;
        if out.len() != 1 {
            return Err(BackendError::Protocol(format!("expected 1 text embedding, got {}", out.len())).into());
        }
        let emb = self.checked(out.pop().unwrap())?;
        self.text_cache.lock().unwrap().insert(prompt.to_string(), emb.clone());
        Ok(emb)
    }

    /// Embeds mono audio already at the backend's sample rate.
    pub fn embed_audio<T: Scalar>(&self, audio: &AudioBuffer<T>) -> Result<Embedding, ScoreError> {
        if audio.sample_rate() != self.info.sample_rate {
            return Err(ScoreError::Precondition(format!(
                "audio sample rate {} Hz, backend expects {} Hz",
                audio.sample_rate(),
                self.info.sample_rate
            )));
        }
        if audio.num_channels() != 1 {
            return Err(ScoreError::Precondition(format!(
                "audio has {} channels, backend expects mono",
                audio.num_channels()
            )));
        }
        let pcm: Vec<f32> = audio.channel(0).iter().map(|s| s.to_f32().unwrap_or(0.0)).collect();
        let values = self.backend.embed_audio(&pcm, audio.sample_rate())?;
        self.checked(values)
    }

    pub fn embed_prompts(&self, prompts: &PromptPair) -> Result<EmbeddedPrompts, ScoreError> {
        let target = self.embed_text(&prompts.target_prompt)?;
        let guide = if prompts.guide_enabled {
            Some(self.embed_text(&prompts.guide_prompt)?)
        } else {
            None
        };
        Ok(EmbeddedPrompts { target, guide })
    }

    /// Scores mono audio at the backend rate.
    pub fn score<T: Scalar>(
        &self,
        audio: &AudioBuffer<T>,
        prompts: &EmbeddedPrompts,
    ) -> Result<ScoreBreakdown, ScoreError> {
        let emb = self.embed_audio(audio)?;
        self.track_determinism(audio, &emb);
        let s_target = cosine_similarity(&emb, &prompts.target)?;
        let s_guide = match &prompts.guide {
            Some(g) => cosine_similarity(&emb, g)?,
            None => 0.0,
        };
        Ok(ScoreBreakdown::new(s_target, s_guide))
    }

    /// Downmixes and resamples arbitrary audio to the backend's format,
    /// then scores it.
    pub fn score_audio<T: Scalar>(
        &self,
        audio: &AudioBuffer<T>,
        prompts: &EmbeddedPrompts,
    ) -> Result<ScoreBreakdown, ScoreError> {
        let prepared = resample(&downmix_mono(audio), self.info.sample_rate);
        self.score(&prepared, prompts)
    }

    fn track_determinism<T: Scalar>(&self, audio: &AudioBuffer<T>, emb: &Embedding) {
        let mut hasher = Sha256::new();
        for s in audio.channel(0) {
            hasher.update(s.to_f32().unwrap_or(0.0).to_le_bytes());
        }
        let key: [u8; 32] = hasher.finalize().into();
        let mut seen = self.seen_audio.lock().unwrap();
        match seen.get(&key) {
            Some(prev) => {
                let drift = prev
                    .iter()
                    .zip(emb.values())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if drift > FLAKY_TOLERANCE {
                    self.flaky.lock().unwrap().push(format!(
                        "backend returned different embeddings for identical audio (max drift {drift:.3e})"
                    ));
                }
            }
            None => {
                seen.insert(key, emb.values().to_vec());
            }
        }
    }

    /// Determinism violations observed so far.
    pub fn flaky_warnings(&self) -> Vec<String> {
        self.flaky.lock().unwrap().clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn cosine_examples() {
        let a = Embedding::new(vec![1.0, 0.0]).unwrap();
        let b = Embedding::new(vec![1.0, 1.0]).unwrap();
        let c = Embedding::new(vec![0.0, 3.0]).unwrap();
        assert_eq!(cosine_similarity(&a, &a).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&a, &c).unwrap(), 0.0);
        assert!((cosine_similarity(&a, &b).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let d = Embedding::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(cosine_similarity(&a, &d), Err(ScoreError::DimensionMismatch { left: 2, right: 3 })));
        assert!((cosine(&[1.0f32, 0.0], &[1.0, 1.0]) - std::f32::consts::FRAC_1_SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn embedding_validation() {
        assert!(Embedding::new(vec![0.0, 0.0]).is_err());
        assert!(Embedding::new(vec![1.0, f64::NAN]).is_err());
        assert!(Embedding::new(vec![]).is_err());
    }

    #[test]
    fn breakdown_arithmetic() {
        let s = ScoreBreakdown::new(0.5, 0.2);
        assert_eq!(s.s_final, 0.5 - 0.2);
        assert!((s.s_final - 0.3).abs() < 1e-15);
    }

    struct Counting {
        inner: TestBackend,
        text_calls: Arc<AtomicUsize>,
    }

    impl EmbeddingBackend for Counting {
        fn info(&self) -> Result<BackendInfo, BackendError> {
            self.inner.info()
        }
        fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
            self.text_calls.fetch_add(1, Ordering::SeqCst);
            self.inner.embed_texts(texts)
        }
        fn embed_audio(&self, pcm: &[f32], rate: u32) -> Result<Vec<f64>, BackendError> {
            self.inner.embed_audio(pcm, rate)
        }
    }

    #[test]
    fn text_cache_hits_backend_once() {
        let calls = Arc::new(AtomicUsize::new(0));
        let scorer = Scorer::new(Counting { inner: TestBackend::new(), text_calls: calls.clone() }).unwrap();
        let a = scorer.embed_text("a warm analog tone").unwrap();
        let b = scorer.embed_text("a warm analog tone").unwrap();
        assert_eq!(a, b);
        assert_eq!(calls.load(Ordering::SeqCst), 1);
        assert!(matches!(scorer.embed_text(""), Err(ScoreError::Precondition(_))));
        assert!(matches!(scorer.embed_text("   "), Err(ScoreError::Precondition(_))));
    }

    #[test]
    fn audio_preconditions() {
        let scorer = Scorer::new(TestBackend::new()).unwrap();
        let wrong_rate = AudioBuffer::<f64>::silence(1, 100, 44100).unwrap();
        let err = scorer.embed_audio(&wrong_rate).unwrap_err().to_string();
        assert!(err.contains("44100") && err.contains("48000"), "{err}");
        let stereo = AudioBuffer::<f64>::silence(2, 100, 48000).unwrap();
        assert!(matches!(scorer.embed_audio(&stereo), Err(ScoreError::Precondition(_))));
        let long = AudioBuffer::<f32>::silence(1, 480_000, 48000).unwrap();
        assert!(scorer.embed_audio(&long).is_ok());
    }

    fn tone(rate: u32) -> AudioBuffer<f64> {
        let x = (0..rate as usize / 2)
            .map(|i| 0.3 * (2.0 * std::f64::consts::PI * 700.0 * i as f64 / rate as f64).sin())
            .collect();
        AudioBuffer::mono(x, rate).unwrap()
    }

    #[test]
    fn guide_disabled_means_final_equals_target() {
        let scorer = Scorer::new(TestBackend::new()).unwrap();
        let prompts = scorer.embed_prompts(&PromptPair::new("bright").without_guide()).unwrap();
        let s = scorer.score(&tone(48000), &prompts).unwrap();
        assert_eq!(s.s_guide, 0.0);
        assert_eq!(s.s_final, s.s_target);
    }

    #[test]
    fn scoring_is_deterministic() {
        let scorer = Scorer::new(TestBackend::new()).unwrap();
        let prompts = scorer.embed_prompts(&PromptPair::new("bright")).unwrap();
        let a = scorer.score(&tone(48000), &prompts).unwrap();
        let b = scorer.score(&tone(48000), &prompts).unwrap();
        assert_eq!(a, b);
        assert!(scorer.flaky_warnings().is_empty());
    }

    #[test]
    fn positive_scaling_invariance() {
        let scorer = Scorer::new(TestBackend::new()).unwrap();
        let prompts = scorer.embed_prompts(&PromptPair::new("bright")).unwrap();
        let base = scorer.score(&tone(48000), &prompts).unwrap();
        for c in [1e-3, 0.5, 7.0, 1e4] {
            let scaled = EmbeddedPrompts {
                target: prompts.target.scaled(c).unwrap(),
                guide: prompts.guide.as_ref().map(|g| g.scaled(1.0 / c).unwrap()),
            };
            let s = scorer.score(&tone(48000), &scaled).unwrap();
            assert!((s.s_final - base.s_final).abs() < 1e-9);
        }
    }

    #[test]
    fn score_audio_resamples_and_downmixes() {
        let scorer = Scorer::new(TestBackend::new()).unwrap();
        let prompts = scorer.embed_prompts(&PromptPair::new("bright")).unwrap();
        let t = tone(44100);
        let stereo = AudioBuffer::new(vec![t.channel(0).to_vec(), t.channel(0).to_vec()], 44100).unwrap();
        let s = scorer.score_audio(&stereo, &prompts).unwrap();
        assert!(s.s_target.abs() <= 1.0 && s.s_guide.abs() <= 1.0);
    }
}
