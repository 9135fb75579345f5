pub mod audio;
pub mod fx;
pub mod optim;
mod scalar;
pub mod score;

pub use scalar::Scalar;

/// Double-precision audio, the default processing type.
pub type Audio = audio::AudioBuffer<f64>;
/// Single-precision audio, as stored in WAV files.
pub type Audio32 = audio::AudioBuffer<f32>;
/// Double-precision surrogate used by the search loop.
pub type Gp = optim::GpModel<f64>;
