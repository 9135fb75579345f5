//! 15-band graphic equalizer built from RBJ cookbook peaking biquads.

use super::params::EQ_BANDS;
use crate::audio::AudioBuffer;
use crate::Scalar;

/// ISO 2/3-octave band centers, Hz.
pub const EQ_CENTER_HZ: [f64; EQ_BANDS] = [
    25.0, 40.0, 63.0, 100.0, 160.0, 250.0, 400.0, 630.0, 1000.0, 1600.0, 2500.0, 4000.0, 6300.0,
    10000.0, 16000.0,
];

pub const EQ_Q: f64 = 1.5;

/// Normalized biquad coefficients (`a0 == 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    pub fn peaking(center_hz: f64, q: f64, gain_db: f64, sample_rate: f64) -> Self {
        let a = 10f64.powf(gain_db / 40.0);
        let w0 = 2.0 * std::f64::consts::PI * center_hz / sample_rate;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * q);
        let a0 = 1.0 + alpha / a;
        Self {
            b0: (1.0 + alpha * a) / a0,
            b1: -2.0 * cos / a0,
            b2: (1.0 - alpha * a) / a0,
            a1: -2.0 * cos / a0,
            a2: (1.0 - alpha / a) / a0,
        }
    }

    /// Magnitude response at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64, sample_rate: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * freq_hz / sample_rate;
        let (s1, c1) = w.sin_cos();
        let (s2, c2) = (2.0 * w).sin_cos();
        let num = ((self.b0 + self.b1 * c1 + self.b2 * c2).powi(2)
            + (self.b1 * s1 + self.b2 * s2).powi(2))
        .sqrt();
        let den = ((1.0 + self.a1 * c1 + self.a2 * c2).powi(2) + (self.a1 * s1 + self.a2 * s2).powi(2))
            .sqrt();
        num / den
    }

    /// Direct form I, zero initial state.
    pub fn process<T: Scalar>(&self, input: &[T]) -> Vec<T> {
        let (b0, b1, b2, a1, a2) =
            (T::lit(self.b0), T::lit(self.b1), T::lit(self.b2), T::lit(self.a1), T::lit(self.a2));
        let (mut x1, mut x2, mut y1, mut y2) = (T::zero(), T::zero(), T::zero(), T::zero());
        input
            .iter()
            .map(|&x| {
                let y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
                x2 = x1;
                x1 = x;
                y2 = y1;
                y1 = y;
                y
            })
            .collect()
    }
}

/// The peaking sections that actually run for these gains at this rate.
///
/// Bands at or above Nyquist are dropped, as are bands at exactly 0 dB
/// (a 0 dB peaking section is the identity).
pub fn eq_sections(gains_db: &[f64; EQ_BANDS], sample_rate: u32) -> Vec<Biquad> {
    let fs = sample_rate as f64;
    EQ_CENTER_HZ
        .iter()
        .zip(gains_db)
        .filter(|(&f, &g)| f < fs / 2.0 && g != 0.0)
        .map(|(&f, &g)| Biquad::peaking(f, EQ_Q, g, fs))
        .collect()
}

pub fn apply_equalizer<T: Scalar>(buf: &AudioBuffer<T>, gains_db: &[f64; EQ_BANDS]) -> AudioBuffer<T> {
    let sections = eq_sections(gains_db, buf.sample_rate());
    if sections.is_empty() {
        return buf.clone();
    }
    buf.map_channels(|_, ch| {
        let mut out = sections[0].process(ch);
        for s in &sections[1..] {
            out = s.process(&out);
        }
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, rate: u32, len: usize) -> Vec<f64> {
        (0..len)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / rate as f64).sin())
            .collect()
    }

    #[test]
    fn flat_gains_are_identity() {
        let buf = AudioBuffer::mono(sine(300.0, 44100, 4096), 44100).unwrap();
        let out = apply_equalizer(&buf, &[0.0; EQ_BANDS]);
        assert!(out.max_abs_diff(&buf).unwrap() <= 1e-9);
    }

    #[test]
    fn zero_db_section_is_unity_everywhere() {
        let bq = Biquad::peaking(1000.0, EQ_Q, 0.0, 48000.0);
        for f in [20.0, 500.0, 1000.0, 8000.0, 20000.0] {
            assert!((bq.magnitude(f, 48000.0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn plus_6db_at_1khz() {
        let mut gains = [0.0; EQ_BANDS];
        gains[8] = 6.0;
        let rate = 48000;
        // Analytic oracle: the section's magnitude response at its center.
        let bq = Biquad::peaking(1000.0, EQ_Q, 6.0, rate as f64);
        let analytic_db = 20.0 * bq.magnitude(1000.0, rate as f64).log10();
        assert!((analytic_db - 6.0).abs() < 1e-9);

        let buf = AudioBuffer::mono(sine(1000.0, rate, rate as usize), rate).unwrap();
        let out = apply_equalizer(&buf, &gains);
        let tail = &out.channel(0)[rate as usize / 2..];
        let rms = (tail.iter().map(|s| s * s).sum::<f64>() / tail.len() as f64).sqrt();
        let measured_db = 20.0 * (rms * 2f64.sqrt()).log10();
        assert!((measured_db - 6.0).abs() <= 0.1, "measured {measured_db} dB");
    }

    #[test]
    fn band_above_nyquist_skipped() {
        let mut gains = [0.0; EQ_BANDS];
        gains[14] = -12.0;
        assert!(eq_sections(&gains, 22050).is_empty());
        let buf = AudioBuffer::mono(sine(5000.0, 22050, 2048), 22050).unwrap();
        assert_eq!(apply_equalizer(&buf, &gains), buf);
    }

    #[test]
    fn cut_attenuates_band() {
        let mut gains = [0.0; EQ_BANDS];
        gains[11] = -12.0;
        let rate = 44100;
        let buf = AudioBuffer::mono(sine(4000.0, rate, rate as usize), rate).unwrap();
        let out = apply_equalizer(&buf, &gains);
        let tail = &out.channel(0)[rate as usize / 2..];
        let peak = tail.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        assert!((20.0 * peak.log10() + 12.0).abs() < 0.1);
    }
}
