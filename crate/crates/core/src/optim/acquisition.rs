//! Expected Improvement and its maximization over the unit hypercube.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::function::erf::erfc;

use super::gp::GpModel;
use crate::Scalar;

pub const REFINE_STEP_SIGMA: f64 = 0.05;

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal PDF.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Expected improvement of a Normal(mu, sigma^2) outcome over `best`.
pub fn expected_improvement<T: Scalar>(mu: T, sigma: T, best: T) -> T {
    let (mu, sigma, best) = (mu.as_f64(), sigma.as_f64(), best.as_f64());
    let gain = mu - best;
    if sigma <= 0.0 {
        return T::lit(gain.max(0.0));
    }
    let z = gain / sigma;
    let ei = gain * normal_cdf(z) + sigma * normal_pdf(z);
    T::lit(ei.max(0.0))
}

/// `count` points of an Owen-scrambled Sobol sequence in `[0, 1)^dim`.
///
/// # Panics
/// If `dim` exceeds the number of dimensions the generator supports.
pub fn sobol_points(count: usize, dim: usize, seed: u32) -> Vec<Vec<f64>> {
    assert!(dim as u32 <= sobol_burley::NUM_DIMENSIONS, "Sobol dimension {dim} unsupported");
    (0..count as u32)
        .map(|i| (0..dim as u32).map(|d| sobol_burley::sample(i, d, seed) as f64).collect())
        .collect()
}

/// The acquisition winner, with the EI of the best raw candidate for
/// reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub x: Vec<f64>,
    pub ei: f64,
    pub candidate_ei: f64,
}

/// EI at `x` under `model`.
pub fn ei_at<T: Scalar>(model: &GpModel<T>, x: &[f64], best: f64) -> f64 {
    let xt: Vec<T> = x.iter().map(|&v| T::lit(v)).collect();
    let (mu, sigma) = model.posterior(&xt);
    expected_improvement(mu, sigma, T::lit(best)).as_f64()
}

/// Picks the next point to evaluate: the best of `candidates` Sobol points
/// by EI, then `refine_steps` single-coordinate Gaussian perturbations kept
/// only when they raise EI.
pub fn propose_next<T: Scalar, R: Rng + ?Sized>(
    model: &GpModel<T>,
    best: f64,
    candidates: usize,
    refine_steps: usize,
    rng: &mut R,
) -> Proposal {
    let dim = model.dim();
    let seed: u32 = rng.random();
    let mut top: Option<(Vec<f64>, f64)> = None;
    for x in sobol_points(candidates.max(1), dim, seed) {
        let ei = ei_at(model, &x, best);
        if top.as_ref().is_none_or(|(_, e)| ei > *e) {
            top = Some((x, ei));
        }
    }
    let (mut x, candidate_ei) = top.expect("at least one candidate");
    let mut ei = candidate_ei;
    let step = Normal::new(0.0, REFINE_STEP_SIGMA).expect("valid step distribution");
    for _ in 0..refine_steps {
        let j = rng.random_range(0..dim);
        let mut trial = x.clone();
        trial[j] = (trial[j] + step.sample(rng)).clamp(0.0, 1.0);
        let trial_ei = ei_at(model, &trial, best);
        if trial_ei > ei {
            x = trial;
            ei = trial_ei;
        }
    }
    Proposal { x, ei, candidate_ei }
}
