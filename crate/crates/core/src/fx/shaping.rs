//! Per-sample nonlinearities: tanh distortion and bit-depth reduction.

use crate::audio::AudioBuffer;
use crate::Scalar;

/// `y = tanh(10^(drive_db / 20) * x)`.
pub fn apply_distortion<T: Scalar>(buf: &AudioBuffer<T>, drive_db: f64) -> AudioBuffer<T> {
    let gain = T::lit(10f64.powf(drive_db / 20.0));
    buf.map_samples(|x| (gain * x).tanh())
}

/// `y = round(clamp(x) * q) / q` with `q = 2^(bit_depth - 1)`; the depth is
/// not rounded to an integer.
pub fn apply_bitcrush<T: Scalar>(buf: &AudioBuffer<T>, bit_depth: f64) -> AudioBuffer<T> {
    let q = T::lit(2f64.powf(bit_depth - 1.0));
    let one = T::one();
    buf.map_samples(|x| (x.max(-one).min(one) * q).round() / q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mono(v: Vec<f64>) -> AudioBuffer<f64> {
        AudioBuffer::mono(v, 44100).unwrap()
    }

    #[test]
    fn distortion_values() {
        let out = apply_distortion(&mono(vec![0.0, 0.5, -0.5]), 0.0);
        assert_eq!(out.channel(0)[0], 0.0);
        assert!((out.channel(0)[1] - 0.462_117_157).abs() < 1e-6);
        assert!((out.channel(0)[2] + 0.462_117_157).abs() < 1e-6);
        let out = apply_distortion(&mono(vec![0.5]), 20.0);
        assert!((out.channel(0)[0] - 0.999_909_2).abs() < 1e-6);
    }

    #[test]
    fn bitcrush_hand_quantized() {
        let out = apply_bitcrush(&mono(vec![0.3, 0.0, 2.0, -3.0]), 8.0);
        assert_eq!(out.channel(0), &[38.0 / 128.0, 0.0, 1.0, -1.0]);
    }

    #[test]
    fn bitcrush_zero_any_depth() {
        for depth in [4.0, 5.3, 9.99, 16.0] {
            assert_eq!(apply_bitcrush(&mono(vec![0.0]), depth).channel(0), &[0.0]);
        }
    }

    #[test]
    fn bitcrush_16_bit_step_bound() {
        let xs: Vec<f64> = (0..=2000).map(|i| -1.0 + i as f64 / 1000.0).collect();
        let out = apply_bitcrush(&mono(xs.clone()), 16.0);
        for (x, y) in xs.iter().zip(out.channel(0)) {
            assert!((x - y).abs() <= 1.0 / 32768.0);
        }
    }

    #[test]
    fn fractional_depth_not_rounded() {
        // q = 2^(6.5 - 1) = 45.2548...
        let out = apply_bitcrush(&mono(vec![0.3]), 6.5);
        let q = 2f64.powf(5.5);
        assert_eq!(out.channel(0)[0], (0.3 * q).round() / q);
        assert_ne!(out.channel(0)[0], (0.3f64 * 64.0).round() / 64.0);
    }
}
