use crate::audio::AudioBuffer;
use crate::Scalar;

pub const DELAY_FEEDBACK: f64 = 0.3;
pub const DELAY_MIX: f64 = 0.5;

/// Feedback echo: `wet[n] = x[n-D] + 0.3 * wet[n-D]`, `y = 0.5 x + 0.5 wet`,
/// with `D = round(delay_seconds * sample_rate)`. The tail past the end of
/// the input is dropped.
pub fn apply_delay<T: Scalar>(buf: &AudioBuffer<T>, delay_seconds: f64) -> AudioBuffer<T> {
    let d = ((delay_seconds * buf.sample_rate() as f64).round() as usize).max(1);
    let fb = T::lit(DELAY_FEEDBACK);
    let mix = T::lit(DELAY_MIX);
    let dry = T::one() - mix;
    buf.map_channels(|_, x| {
        let mut wet = vec![T::zero(); x.len()];
        for n in d..x.len() {
            wet[n] = x[n - d] + fb * wet[n - d];
        }
        x.iter().zip(&wet).map(|(&x, &w)| dry * x + mix * w).collect()
    })
}
