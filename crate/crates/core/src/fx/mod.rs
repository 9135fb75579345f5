//! The six-stage effect chain and its parameter space.
//!
//! Stages always run in the order Equalizer, Distortion, BitCrush,
//! PitchShift, Delay, Reverb. The four middle effects are gated by their
//! activation flag; Equalizer and Reverb run whenever their stage is
//! enabled.

mod delay;
mod eq;
mod params;
mod pitch;
mod reverb;
mod shaping;

pub use delay::{apply_delay, DELAY_FEEDBACK, DELAY_MIX};
pub use eq::{apply_equalizer, eq_sections, Biquad, EQ_CENTER_HZ, EQ_Q};
pub use params::*;
pub use pitch::{apply_pitch_shift, wsola_stretch, WsolaGeometry};
pub use reverb::apply_reverb;
pub use shaping::{apply_bitcrush, apply_distortion};

use crate::audio::AudioBuffer;
use crate::Scalar;

/// Runs the chain over `buf`, restricted to `stages`.
pub fn apply_chain<T: Scalar>(buf: &AudioBuffer<T>, p: &FxParams, stages: StageSet) -> AudioBuffer<T> {
    let mut out = buf.clone();
    for stage in stages.iter() {
        out = match stage {
            Stage::Equalizer => apply_equalizer(&out, &p.eq_gain_db),
            Stage::Distortion if p.enable_distortion => apply_distortion(&out, p.distortion_drive_db),
            Stage::Bitcrush if p.enable_bitcrush => apply_bitcrush(&out, p.bitcrush_bit_depth),
            Stage::PitchShift if p.enable_pitch_shift => apply_pitch_shift(&out, p.pitch_shift_semitones),
            Stage::Delay if p.enable_delay => apply_delay(&out, p.delay_seconds),
            Stage::Reverb => {
                apply_reverb(&out, p.reverb_room_size, p.reverb_damping, p.reverb_wet_level)
            }
            _ => continue,
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(len: usize, seed: u64) -> Vec<f64> {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (0..len)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    #[test]
    fn neutral_chain_is_identity() {
        let buf = AudioBuffer::new(vec![noise(3000, 1), noise(3000, 2)], 22050).unwrap();
        let out = apply_chain(&buf, &FxParams::neutral(), StageSet::all());
        assert!(out.max_abs_diff(&buf).unwrap() <= 1e-9);
    }

    #[test]
    fn distortion_only_is_tanh() {
        let mut p = FxParams::neutral();
        p.enable_distortion = true;
        p.distortion_drive_db = 0.0;
        let buf = AudioBuffer::mono(noise(1000, 3), 16000).unwrap();
        let out = apply_chain(&buf, &p, StageSet::all());
        for (y, x) in out.channel(0).iter().zip(buf.channel(0)) {
            assert!((y - x.tanh()).abs() < 1e-15);
        }
    }

    #[test]
    fn restricted_chain_ignores_other_effects() {
        let buf = AudioBuffer::mono(noise(4000, 4), 16000).unwrap();
        let stages = StageSet::parse_list("equalizer,reverb").unwrap();
        let mut a = FxParams::decode(&UnitVector::splat(0.7).unwrap());
        let reference = apply_chain(&buf, &a, stages);
        a.distortion_drive_db = 3.0;
        a.bitcrush_bit_depth = 5.0;
        a.pitch_shift_semitones = -7.0;
        a.delay_seconds = 0.11;
        a.enable_delay = false;
        assert_eq!(apply_chain(&buf, &a, stages), reference);
    }
}
