//! Audio buffers and the I/O helpers that feed the effect chain and the
//! embedding backend: WAV load/save, sinc resampling, and mono downmix.

mod resample;
mod wav;

use std::path::PathBuf;

use thiserror::Error;

use crate::Scalar;

pub use resample::{resample, resample_channel};
pub use wav::{load_wav, save_wav};

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("audio file not found: {0}")]
    NotFound(PathBuf),
    #[error("unsupported format in {path}: {detail}")]
    UnsupportedFormat { path: PathBuf, detail: String },
    #[error("corrupt file {path}: {detail}")]
    CorruptFile { path: PathBuf, detail: String },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid audio buffer: {0}")]
    InvalidBuffer(String),
}

/// Channel-separated sampled audio.
///
/// Every channel has the same length, the sample rate is positive and all
/// samples are finite. Constructors enforce this; the DSP routines in this
/// crate preserve it.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer<T> {
    channels: Vec<Vec<T>>,
    sample_rate: u32,
}

impl<T: Scalar> AudioBuffer<T> {
    pub fn new(channels: Vec<Vec<T>>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidBuffer("sample rate must be positive".into()));
        }
        if channels.is_empty() {
            return Err(AudioError::InvalidBuffer("at least one channel required".into()));
        }
        let len = channels[0].len();
        if let Some(i) = channels.iter().position(|c| c.len() != len) {
            return Err(AudioError::InvalidBuffer(format!(
                "channel {i} has {} samples, channel 0 has {len}",
                channels[i].len()
            )));
        }
        for (ci, ch) in channels.iter().enumerate() {
            if let Some(si) = ch.iter().position(|s| !s.is_finite()) {
                return Err(AudioError::InvalidBuffer(format!(
                    "non-finite sample at channel {ci}, index {si}"
                )));
            }
        }
        Ok(Self { channels, sample_rate })
    }

    pub fn mono(samples: Vec<T>, sample_rate: u32) -> Result<Self, AudioError> {
        Self::new(vec![samples], sample_rate)
    }

    pub fn silence(num_channels: usize, len: usize, sample_rate: u32) -> Result<Self, AudioError> {
        Self::new(vec![vec![T::zero(); len]; num_channels.max(1)], sample_rate)
    }

    /// Builds a buffer from DSP output without re-validating.
    ///
    /// Callers must uphold the struct invariants; non-finite values are
    /// flushed to zero so a misbehaving stage cannot poison later ones.
    pub(crate) fn from_processed(mut channels: Vec<Vec<T>>, sample_rate: u32) -> Self {
        debug_assert!(!channels.is_empty());
        debug_assert!(channels.iter().all(|c| c.len() == channels[0].len()));
        for ch in &mut channels {
            for s in ch.iter_mut() {
                if !s.is_finite() {
                    *s = T::zero();
                }
            }
        }
        Self { channels, sample_rate }
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_secs(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    pub fn channel(&self, index: usize) -> &[T] {
        &self.channels[index]
    }

    pub fn channels(&self) -> &[Vec<T>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<T>> {
        self.channels
    }

    /// Applies `f` to every channel independently; `f` receives the channel
    /// index and must return a channel of the same length.
    pub(crate) fn map_channels<F>(&self, mut f: F) -> Self
    where
        F: FnMut(usize, &[T]) -> Vec<T>,
    {
        let out: Vec<Vec<T>> = self
            .channels
            .iter()
            .enumerate()
            .map(|(i, c)| f(i, c))
            .collect();
        Self::from_processed(out, self.sample_rate)
    }

    /// Applies `f` to every sample.
    pub(crate) fn map_samples<F>(&self, f: F) -> Self
    where
        F: Fn(T) -> T,
    {
        self.map_channels(|_, c| c.iter().map(|&s| f(s)).collect())
    }

    /// Converts to another scalar type.
    pub fn cast<U: Scalar>(&self) -> AudioBuffer<U> {
        let channels = self
            .channels
            .iter()
            .map(|c| c.iter().map(|&s| U::lit(s.as_f64())).collect())
            .collect();
        AudioBuffer::from_processed(channels, self.sample_rate)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Option<f64> {
        if self.num_channels() != other.num_channels() || self.len() != other.len() {
            return None;
        }
        let mut worst = 0.0f64;
        for (a, b) in self.channels.iter().zip(&other.channels) {
            for (&x, &y) in a.iter().zip(b) {
                worst = worst.max((x - y).abs().as_f64());
            }
        }
        Some(worst)
    }
}

/// Averages all channels into one.
pub fn downmix_mono<T: Scalar>(buf: &AudioBuffer<T>) -> AudioBuffer<T> {
    if buf.num_channels() == 1 {
        return buf.clone();
    }
    let n = T::lit(buf.num_channels() as f64);
    let mixed = (0..buf.len())
        .map(|i| {
            let sum = buf.channels.iter().fold(T::zero(), |acc, c| acc + c[i]);
            sum / n
        })
        .collect();
    AudioBuffer::from_processed(vec![mixed], buf.sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_buffers() {
        assert!(AudioBuffer::<f64>::new(vec![vec![0.0]], 0).is_err());
        assert!(AudioBuffer::<f64>::new(vec![], 44100).is_err());
        assert!(AudioBuffer::new(vec![vec![0.0, 1.0], vec![0.0]], 44100).is_err());
        assert!(AudioBuffer::new(vec![vec![f64::NAN]], 44100).is_err());
        assert!(AudioBuffer::new(vec![vec![f32::INFINITY]], 44100).is_err());
    }

    #[test]
    fn downmix_mono_identity() {
        let buf = AudioBuffer::mono(vec![0.1f64, -0.2, 0.3], 8000).unwrap();
        assert_eq!(downmix_mono(&buf), buf);
    }

    #[test]
    fn downmix_stereo_mean() {
        let buf = AudioBuffer::new(vec![vec![1.0f64, 0.0], vec![0.0, 1.0]], 8000).unwrap();
        assert_eq!(downmix_mono(&buf).channel(0), &[0.5, 0.5]);
    }

    #[test]
    fn downmix_cancellation() {
        let l: Vec<f32> = (0..64).map(|i| (i as f32 * 0.1).sin()).collect();
        let r: Vec<f32> = l.iter().map(|x| -x).collect();
        let out = downmix_mono(&AudioBuffer::new(vec![l, r], 8000).unwrap());
        assert_eq!(out.len(), 64);
        assert!(out.channel(0).iter().all(|&s| s == 0.0));
    }

    #[test]
    fn from_processed_flushes_non_finite() {
        let buf = AudioBuffer::from_processed(vec![vec![1.0f64, f64::NAN, f64::NEG_INFINITY]], 100);
        assert_eq!(buf.channel(0), &[1.0, 0.0, 0.0]);
    }
}
