//! Deterministic stand-in for a neural text/audio embedding model.
//!
//! Audio maps to 16 signal statistics:
//!
//! | index | feature |
//! |-------|---------|
//! | 0     | RMS level |
//! | 1     | spectral centroid / Nyquist |
//! | 2     | zero-crossing rate (crossings per sample pair) |
//! | 3..16 | 13 mel-band levels, `10 log10(E + 1e-10) / 100` |
//!
//! The spectrum is a Welch average of 2048-point Hann frames at hop 1024.
//! Silence therefore maps to `[0, 0, 0, -1, ..., -1]`.
//!
//! Text maps to a catalogued vector when one is registered for the exact
//! prompt, otherwise to a vector derived from the prompt's SHA-256 digest:
//! the 32 digest bytes read as 16 little-endian `u16` values `v`, each
//! mapped to `2 v / 65535 - 1`.

use std::collections::HashMap;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use sha2::{Digest, Sha256};

use super::backend::{BackendError, BackendInfo, EmbeddingBackend};

pub const TEST_BACKEND_DIM: usize = 16;
const MEL_BANDS: usize = 13;
const FRAME: usize = 2048;
const HOP: usize = 1024;
const DEFAULT_RATE: u32 = 48_000;

#[derive(Debug, Clone)]
pub struct TestBackend {
    sample_rate: u32,
    catalog: HashMap<String, Vec<f64>>,
}

impl Default for TestBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl TestBackend {
    pub fn new() -> Self {
        Self { sample_rate: DEFAULT_RATE, catalog: HashMap::new() }
    }

    pub fn with_sample_rate(mut self, sample_rate: u32) -> Self {
        assert!(sample_rate > 0);
        self.sample_rate = sample_rate;
        self
    }

    /// Registers a fixed embedding for an exact prompt string.
    pub fn with_text(mut self, prompt: impl Into<String>, vector: [f64; TEST_BACKEND_DIM]) -> Self {
        self.catalog.insert(prompt.into(), vector.to_vec());
        self
    }

    pub fn model_id(&self) -> String {
        format!("builtin-test/features-{TEST_BACKEND_DIM}@{}", self.sample_rate)
    }

    pub fn text_vector(&self, prompt: &str) -> Vec<f64> {
        match self.catalog.get(prompt) {
            Some(v) => v.clone(),
            None => hashed_text_vector(prompt).to_vec(),
        }
    }
}

pub fn hashed_text_vector(prompt: &str) -> [f64; TEST_BACKEND_DIM] {
    let digest = Sha256::digest(prompt.as_bytes());
    let mut out = [0.0; TEST_BACKEND_DIM];
    for (o, pair) in out.iter_mut().zip(digest.chunks_exact(2)) {
        let v = u16::from_le_bytes([pair[0], pair[1]]);
        *o = 2.0 * v as f64 / 65535.0 - 1.0;
    }
    out
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Welch-averaged power spectrum, bins `0..=FRAME/2`.
fn power_spectrum(x: &[f32]) -> Vec<f64> {
    let window: Vec<f64> = (0..FRAME)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / FRAME as f64).cos())
        .collect();
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(FRAME);
    let frames = if x.len() <= FRAME { 1 } else { (x.len() - FRAME) / HOP + 1 };
    let mut power = vec![0.0; FRAME / 2 + 1];
    let mut buf = vec![Complex::default(); FRAME];
    for f in 0..frames {
        let start = f * HOP;
        for (i, b) in buf.iter_mut().enumerate() {
            let s = x.get(start + i).copied().unwrap_or(0.0) as f64;
            *b = Complex::new(s * window[i], 0.0);
        }
        fft.process(&mut buf);
        for (p, c) in power.iter_mut().zip(&buf) {
            *p += c.norm_sqr();
        }
    }
    let scale = 1.0 / (frames as f64 * window_power);
    power.iter_mut().for_each(|p| *p *= scale);
    power
}

/// The 16 signal statistics used as the test backend's audio embedding.
pub fn audio_features(pcm: &[f32], sample_rate: u32) -> [f64; TEST_BACKEND_DIM] {
    let mut out = [0.0; TEST_BACKEND_DIM];
    if pcm.is_empty() {
        out[3..].fill(-1.0);
        return out;
    }
    let n = pcm.len() as f64;
    out[0] = (pcm.iter().map(|&s| (s as f64).powi(2)).sum::<f64>() / n).sqrt();

    let power = power_spectrum(pcm);
    let nyquist = sample_rate as f64 / 2.0;
    let bin_hz = sample_rate as f64 / FRAME as f64;
    let total: f64 = power.iter().sum();
    out[1] = if total > 0.0 {
        power.iter().enumerate().map(|(k, p)| k as f64 * bin_hz * p).sum::<f64>() / total / nyquist
    } else {
        0.0
    };

    out[2] = if pcm.len() > 1 {
        let crossings = pcm.windows(2).filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0)).count();
        crossings as f64 / (pcm.len() - 1) as f64
    } else {
        0.0
    };

    let top = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..MEL_BANDS + 2)
        .map(|i| mel_to_hz(top * i as f64 / (MEL_BANDS + 1) as f64))
        .collect();
    for b in 0..MEL_BANDS {
        let (lo, mid, hi) = (edges[b], edges[b + 1], edges[b + 2]);
        let (mut acc, mut wsum) = (0.0, 0.0);
        for (k, p) in power.iter().enumerate() {
            let f = k as f64 * bin_hz;
            let w = if f > lo && f <= mid {
                (f - lo) / (mid - lo)
            } else if f > mid && f < hi {
                (hi - f) / (hi - mid)
            } else {
                0.0
            };
            acc += w * p;
            wsum += w;
        }
        let energy = if wsum > 0.0 { acc / wsum } else { 0.0 };
        out[3 + b] = 10.0 * (energy + 1e-10).log10() / 100.0;
    }
    out
}

impl EmbeddingBackend for TestBackend {
    fn info(&self) -> Result<BackendInfo, BackendError> {
        Ok(BackendInfo {
            embedding_dim: TEST_BACKEND_DIM,
            sample_rate: self.sample_rate,
            model_id: self.model_id(),
        })
    }

    fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        Ok(texts.iter().map(|t| self.text_vector(t)).collect())
    }

    fn embed_audio(&self, pcm: &[f32], sample_rate: u32) -> Result<Vec<f64>, BackendError> {
        if sample_rate != self.sample_rate {
            return Err(BackendError::Rejected {
                status: 400,
                message: format!("sample_rate must be {}, got {sample_rate}", self.sample_rate),
            });
        }
        Ok(audio_features(pcm, sample_rate).to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silence_vector() {
        let f = audio_features(&vec![0.0; 48000], 48000);
        let mut expected = [-1.0; TEST_BACKEND_DIM];
        expected[..3].fill(0.0);
        for (a, b) in f.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "{f:?}");
        }
    }

    #[test]
    fn bright_hash_vector() {
        // Computed with Python's hashlib/struct from the definition above.
        let expected = [
            -0.033920805676356136, -0.5918516823071641, 0.5902342259861142, 0.11210803387502866,
            -0.11097886625467313, 0.02915999084458676, -0.9204089417868315, 0.9388418402380407,
            -0.7824368657969024, -0.8947737850003815, -0.8200961318379492, 0.5522087434195468,
            -0.7516746776531624, -0.15074387731746397, 0.9679865720607308, 0.6944533455405508,
        ];
        let v = hashed_text_vector("bright");
        for (a, b) in v.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn catalog_overrides_hash() {
        let mut v = [0.0; TEST_BACKEND_DIM];
        v[1] = 1.0;
        let b = TestBackend::new().with_text("bright", v);
        assert_eq!(b.text_vector("bright"), v.to_vec());
        assert_ne!(b.text_vector("dark"), v.to_vec());
    }

    #[test]
    fn features_track_signal_properties() {
        let rate = 48000;
        let tone = |f: f64| -> Vec<f32> {
            (0..rate)
                .map(|i| (0.5 * (2.0 * std::f64::consts::PI * f * i as f64 / rate as f64).sin()) as f32)
                .collect()
        };
        let low = audio_features(&tone(200.0), rate as u32);
        let high = audio_features(&tone(6000.0), rate as u32);
        assert!((low[0] - 0.5 / 2f64.sqrt()).abs() < 1e-3);
        assert!(high[1] > low[1]);
        assert!((low[2] - 400.0 / rate as f64).abs() < 1e-3);
        assert!((high[2] - 12000.0 / rate as f64).abs() < 1e-3);
        assert!(low[3 + 1] > high[3 + 1]);
        // 6 kHz sits in mel band 8 at 48 kHz.
        assert!(high[3 + 8] > low[3 + 8]);
    }

    #[test]
    fn rejects_wrong_rate() {
        assert!(matches!(
            TestBackend::new().embed_audio(&[0.0; 10], 16000),
            Err(BackendError::Rejected { status: 400, .. })
        ));
    }
}
