//! Duration-preserving pitch shift: resample by `2^(semitones/12)`, then
//! WSOLA time-stretch back to the original length.
//!
//! WSOLA uses 50 ms Hann frames at a 12.5 ms synthesis hop. Each analysis
//! frame may slide up to ±5 ms from its nominal position; the offset chosen
//! maximizes normalized cross-correlation with the natural continuation of
//! the previous frame. Frame positions are found once on the channel mean
//! and shared by all channels so stereo images stay coherent.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::audio::{resample_channel, AudioBuffer};
use crate::Scalar;

const WINDOW_SECONDS: f64 = 0.050;
const HOP_SECONDS: f64 = 0.0125;
const TOLERANCE_SECONDS: f64 = 0.005;

/// Frame geometry in samples at a given rate.
#[derive(Debug, Clone, Copy)]
pub struct WsolaGeometry {
    pub window: usize,
    pub hop: usize,
    pub tolerance: usize,
}

impl WsolaGeometry {
    pub fn for_rate(sample_rate: u32) -> Self {
        let fs = sample_rate as f64;
        Self {
            window: ((WINDOW_SECONDS * fs).round() as usize).max(4),
            hop: ((HOP_SECONDS * fs).round() as usize).max(1),
            tolerance: (TOLERANCE_SECONDS * fs).round() as usize,
        }
    }
}

/// Sliding normalized cross-correlation of a template against a search
/// region, via FFT.
struct Correlator {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    region: Vec<Complex<f64>>,
    template: Vec<Complex<f64>>,
}

impl Correlator {
    fn new(window: usize, tolerance: usize) -> Self {
        let size = (window + 2 * tolerance).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self {
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
            region: vec![Complex::default(); size],
            template: vec![Complex::default(); size],
        }
    }

    /// Returns the offset `d` in `0..=region.len() - template.len()` that
    /// maximizes `<template, region[d..]> / (|template| |region[d..]|)`.
    fn best_offset(&mut self, template: &[f64], region: &[f64]) -> usize {
        let w = template.len();
        let lags = region.len() + 1 - w;
        let t_energy: f64 = template.iter().map(|v| v * v).sum();
        if t_energy <= 0.0 {
            return lags / 2;
        }
        for (dst, &v) in self.region.iter_mut().zip(region.iter().chain(std::iter::repeat(&0.0))) {
            *dst = Complex::new(v, 0.0);
        }
        for (dst, &v) in self.template.iter_mut().zip(template.iter().chain(std::iter::repeat(&0.0))) {
            *dst = Complex::new(v, 0.0);
        }
        self.forward.process(&mut self.region);
        self.forward.process(&mut self.template);
        for (r, t) in self.region.iter_mut().zip(&self.template) {
            *r *= t.conj();
        }
        self.inverse.process(&mut self.region);
        let scale = 1.0 / self.size as f64;

        // Running energy of each candidate segment.
        let mut energy: f64 = region[..w].iter().map(|v| v * v).sum();
        let mut best = (f64::NEG_INFINITY, lags / 2);
        for d in 0..lags {
            if d > 0 {
                energy += region[d + w - 1].powi(2) - region[d - 1].powi(2);
            }
            let score = if energy > 1e-12 * t_energy {
                self.region[d].re * scale / (energy.max(0.0) * t_energy).sqrt()
            } else {
                0.0
            };
            if score > best.0 {
                best = (score, d);
            }
        }
        best.1
    }
}

fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / len as f64).cos())
        .collect()
}

fn segment(x: &[f64], start: isize, len: usize, out: &mut Vec<f64>) {
    out.clear();
    out.extend((0..len as isize).map(|i| {
        let k = start + i;
        if k >= 0 && (k as usize) < x.len() {
            x[k as usize]
        } else {
            0.0
        }
    }));
}

/// Analysis start position for each synthesis frame when stretching
/// `guide` to `out_len` samples.
fn wsola_positions(guide: &[f64], out_len: usize, geom: WsolaGeometry) -> Vec<isize> {
    let frames = out_len.div_ceil(geom.hop) + 1;
    let analysis_hop = geom.hop as f64 * guide.len() as f64 / out_len.max(1) as f64;
    let tol = geom.tolerance as isize;
    let mut correlator = Correlator::new(geom.window, geom.tolerance);
    let mut template = Vec::with_capacity(geom.window);
    let mut region = Vec::with_capacity(geom.window + 2 * geom.tolerance);
    let mut positions = Vec::with_capacity(frames);
    for k in 0..frames {
        let nominal = (k as f64 * analysis_hop).round() as isize;
        let pos = match positions.last() {
            None => nominal,
            Some(_) if tol == 0 => nominal,
            Some(&prev) => {
                segment(guide, prev + geom.hop as isize, geom.window, &mut template);
                segment(guide, nominal - tol, geom.window + 2 * geom.tolerance, &mut region);
                nominal - tol + correlator.best_offset(&template, &region) as isize
            }
        };
        positions.push(pos);
    }
    positions
}

fn overlap_add(x: &[f64], positions: &[isize], out_len: usize, geom: WsolaGeometry) -> Vec<f64> {
    let window = hann(geom.window);
    let mut acc = vec![0.0; out_len + geom.window];
    let mut norm = vec![0.0; out_len + geom.window];
    let mut frame = Vec::with_capacity(geom.window);
    for (k, &pos) in positions.iter().enumerate() {
        let start = k * geom.hop;
        if start >= out_len {
            break;
        }
        segment(x, pos, geom.window, &mut frame);
        for i in 0..geom.window {
            acc[start + i] += window[i] * frame[i];
            norm[start + i] += window[i];
        }
    }
    acc.truncate(out_len);
    acc.iter()
        .zip(&norm)
        .map(|(&a, &n)| if n > 1e-9 { a / n } else { 0.0 })
        .collect()
}

/// Stretches every channel of `channels` (equal lengths) to `out_len`.
pub fn wsola_stretch(channels: &[Vec<f64>], out_len: usize, sample_rate: u32) -> Vec<Vec<f64>> {
    let geom = WsolaGeometry::for_rate(sample_rate);
    let len = channels.first().map_or(0, Vec::len);
    if len == 0 {
        return channels.iter().map(|_| vec![0.0; out_len]).collect();
    }
    let guide: Vec<f64> = if channels.len() == 1 {
        channels[0].clone()
    } else {
        (0..len)
            .map(|i| channels.iter().map(|c| c[i]).sum::<f64>() / channels.len() as f64)
            .collect()
    };
    let positions = wsola_positions(&guide, out_len, geom);
    channels
        .iter()
        .map(|c| overlap_add(c, &positions, out_len, geom))
        .collect()
}

pub fn apply_pitch_shift<T: Scalar>(buf: &AudioBuffer<T>, semitones: f64) -> AudioBuffer<T> {
    if semitones == 0.0 || buf.is_empty() {
        return buf.clone();
    }
    let factor = 2f64.powf(semitones / 12.0);
    let len = buf.len();
    // Playing `factor` times faster raises pitch by `factor` and shortens
    // the signal by the same amount.
    let squeezed_len = ((len as f64 / factor).round() as usize).max(1);
    let squeezed: Vec<Vec<f64>> = buf
        .channels()
        .iter()
        .map(|c| {
            let x: Vec<f64> = c.iter().map(|s| s.as_f64()).collect();
            resample_channel(&x, 1.0 / factor, squeezed_len)
        })
        .collect();
    let stretched = wsola_stretch(&squeezed, len, buf.sample_rate());
    let channels = stretched
        .into_iter()
        .map(|c| c.into_iter().map(T::lit).collect())
        .collect();
    AudioBuffer::from_processed(channels, buf.sample_rate())
}
