use std::io;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{AudioBuffer, AudioError};
use crate::Scalar;

/// Reads a PCM-16, PCM-24 or float-32 little-endian RIFF/WAVE file.
///
/// Integer PCM is scaled by `2^(bits-1)`. Non-data chunks are skipped.
pub fn load_wav<T: Scalar>(path: impl AsRef<Path>) -> Result<AudioBuffer<T>, AudioError> {
    let path = path.as_ref();
    let corrupt = |detail: String| AudioError::CorruptFile { path: path.to_path_buf(), detail };
    let unsupported =
        |detail: String| AudioError::UnsupportedFormat { path: path.to_path_buf(), detail };

    let reader = WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) if io.kind() == io::ErrorKind::NotFound => {
            AudioError::NotFound(path.to_path_buf())
        }
        hound::Error::IoError(io) if io.kind() == io::ErrorKind::UnexpectedEof => {
            corrupt("file ends inside the header".into())
        }
        hound::Error::IoError(source) => AudioError::Io { path: path.to_path_buf(), source },
        hound::Error::Unsupported => unsupported("codec is not PCM or IEEE float".into()),
        other => corrupt(other.to_string()),
    })?;

    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(corrupt("zero channels".into()));
    }
    if spec.sample_rate == 0 {
        return Err(corrupt("zero sample rate".into()));
    }

    let read_err = |e: hound::Error| match e {
        hound::Error::IoError(io) if io.kind() == io::ErrorKind::UnexpectedEof => {
            corrupt("data chunk truncated".into())
        }
        other => corrupt(other.to_string()),
    };

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32_768.0))
            .collect::<Result<_, _>>()
            .map_err(read_err)?,
        (SampleFormat::Int, 24) => reader
            .into_samples::<i32>()
            .map(|s| s.map(|v| v as f64 / 8_388_608.0))
            .collect::<Result<_, _>>()
            .map_err(read_err)?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(read_err)?,
        (fmt, bits) => {
            return Err(unsupported(format!("{bits}-bit {fmt:?} samples")));
        }
    };

    if interleaved.len() % channels != 0 {
        return Err(corrupt("data chunk ends mid-frame".into()));
    }
    if let Some(i) = interleaved.iter().position(|s| !s.is_finite()) {
        return Err(corrupt(format!("non-finite sample at index {i}")));
    }

    let frames = interleaved.len() / channels;
    let mut out = vec![Vec::with_capacity(frames); channels];
    for frame in interleaved.chunks_exact(channels) {
        for (ch, &s) in out.iter_mut().zip(frame) {
            ch.push(T::lit(s));
        }
    }
    AudioBuffer::new(out, spec.sample_rate).map_err(|e| corrupt(e.to_string()))
}

/// Writes an IEEE float-32 WAV. Samples are stored unclipped.
pub fn save_wav<T: Scalar>(buf: &AudioBuffer<T>, path: impl AsRef<Path>) -> Result<(), AudioError> {
    let path = path.as_ref();
    let write_err = |e: hound::Error| AudioError::Write {
        path: path.to_path_buf(),
        source: match e {
            hound::Error::IoError(io) => io,
            other => io::Error::other(other.to_string()),
        },
    };
    let spec = WavSpec {
        channels: buf.num_channels() as u16,
        sample_rate: buf.sample_rate(),
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = WavWriter::create(path, spec).map_err(write_err)?;
    for i in 0..buf.len() {
        for ch in buf.channels() {
            let s = ch[i].to_f32().unwrap_or(0.0);
            writer.write_sample(s).map_err(write_err)?;
        }
    }
    writer.finalize().map_err(write_err)
}
