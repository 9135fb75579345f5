//! Gaussian-process surrogate with a Matérn-5/2 ARD kernel.
//!
//! Targets are standardized before fitting and predictions are mapped back.
//! Hyperparameters (one lengthscale per input dimension, signal variance,
//! noise variance) maximize the log marginal likelihood. The search runs
//! from several random starts, each refined by coordinate-wise golden-section
//! passes in log space.

use rand::Rng;
use thiserror::Error;

use crate::Scalar;

pub const LENGTHSCALE_BOUNDS: (f64, f64) = (1e-3, 10.0);
pub const SIGNAL_VARIANCE_BOUNDS: (f64, f64) = (1e-2, 1e2);
/// The lower bound doubles as the jitter floor.
pub const NOISE_VARIANCE_BOUNDS: (f64, f64) = (1e-6, 1.0);
/// Inputs closer than this in every coordinate are merged.
pub const DUPLICATE_TOLERANCE: f64 = 1e-9;
/// Jitter escalation gives up once the noise term would exceed this.
pub const MAX_JITTER: f64 = 1e-2;

#[derive(Debug, Error, PartialEq)]
pub enum GpError {
    #[error("at least 2 observations are required, got {0}")]
    TooFewObservations(usize),
    #[error("input {index} has dimension {actual}, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, actual: usize },
    #[error("non-finite observation at index {0}")]
    NonFinite(usize),
    #[error("kernel matrix not positive definite even with noise variance {0:e}")]
    IllConditioned(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpHyperparams<T> {
    pub lengthscales: Vec<T>,
    pub signal_variance: T,
    pub noise_variance: T,
}

impl<T: Scalar> GpHyperparams<T> {
    pub fn isotropic(dim: usize, lengthscale: f64, signal_variance: f64, noise_variance: f64) -> Self {
        Self {
            lengthscales: vec![T::lit(lengthscale); dim],
            signal_variance: T::lit(signal_variance),
            noise_variance: T::lit(noise_variance),
        }
    }

    fn from_log(theta: &[f64]) -> Self {
        let d = theta.len() - 2;
        Self {
            lengthscales: theta[..d].iter().map(|v| T::lit(v.exp())).collect(),
            signal_variance: T::lit(theta[d].exp()),
            noise_variance: T::lit(theta[d + 1].exp()),
        }
    }
}

/// Multi-start settings for hyperparameter fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub restarts: usize,
    pub sweeps: usize,
    /// Golden-section evaluations per coordinate line search.
    pub line_evals: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { restarts: 16, sweeps: 3, line_evals: 12 }
    }
}

/// Matérn-5/2 correlation at scaled distance `r`.
#[inline]
pub fn matern52<T: Scalar>(r: T) -> T {
    let s5 = T::lit(5f64.sqrt());
    let sr = s5 * r;
    (T::one() + sr + T::lit(5.0 / 3.0) * r * r) * (-sr).exp()
}

/// Scaled squared distance `sum ((a_i - b_i) / l_i)^2`.
#[inline]
fn scaled_sq_dist<T: Scalar>(a: &[T], b: &[T], lengthscales: &[T]) -> T {
    a.iter()
        .zip(b)
        .zip(lengthscales)
        .fold(T::zero(), |acc, ((&x, &y), &l)| {
            let d = (x - y) / l;
            acc + d * d
        })
}

/// Dot product with four independent accumulators, which lets the
/// compiler keep several multiply-adds in flight.
#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = T::zero();
    for i in 4 * chunks..n {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// In-place lower Cholesky factor of a row-major `n x n` matrix. Returns
/// false if the matrix is not numerically positive definite.
fn cholesky<T: Scalar>(a: &mut [T], n: usize) -> bool {
    for j in 0..n {
        let (upper, lower) = a.split_at_mut((j + 1) * n);
        let row_j = &mut upper[j * n..];
        let diag = row_j[j] - dot(&row_j[..j], &row_j[..j]);
        if !(diag > T::zero()) || !diag.is_finite() {
            return false;
        }
        let ljj = diag.sqrt();
        row_j[j] = ljj;
        for v in &mut row_j[j + 1..] {
            *v = T::zero();
        }
        let row_j = &upper[j * n..j * n + j];
        for i in j + 1..n {
            let row_i = &mut lower[(i - j - 1) * n..(i - j) * n];
            row_i[j] = (row_i[j] - dot(&row_i[..j], row_j)) / ljj;
        }
    }
    true
}

/// Solves `L y = b` in place.
fn forward_solve<T: Scalar>(l: &[T], n: usize, b: &mut [T]) {
    for i in 0..n {
        let v = b[i] - dot(&l[i * n..i * n + i], &b[..i]);
        b[i] = v / l[i * n + i];
    }
}

/// Solves `L^T x = b` in place.
fn backward_solve<T: Scalar>(l: &[T], n: usize, b: &mut [T]) {
    for i in (0..n).rev() {
        let mut v = b[i];
        for k in i + 1..n {
            v -= l[k * n + i] * b[k];
        }
        b[i] = v / l[i * n + i];
    }
}

/// Collapses near-duplicate inputs, averaging their targets.
pub fn merge_duplicates<T: Scalar>(points: &[Vec<T>], values: &[T]) -> (Vec<Vec<T>>, Vec<T>) {
    let tol = T::lit(DUPLICATE_TOLERANCE);
    let mut merged: Vec<(Vec<T>, T, usize)> = Vec::new();
    for (p, &v) in points.iter().zip(values) {
        let hit = merged.iter_mut().find(|(q, _, _)| {
            q.iter().zip(p).all(|(&a, &b)| (a - b).abs() <= tol)
        });
        match hit {
            Some((_, sum, count)) => {
                *sum += v;
                *count += 1;
            }
            None => merged.push((p.clone(), v, 1)),
        }
    }
    merged
        .into_iter()
        .map(|(p, sum, count)| (p, sum / T::lit(count as f64)))
        .unzip()
}

/// Fitted surrogate. Immutable once built.
#[derive(Debug, Clone)]
pub struct GpModel<T> {
    hyper: GpHyperparams<T>,
    inputs: Vec<Vec<T>>,
    targets: Vec<T>,
    y_mean: T,
    y_scale: T,
    noise_used: T,
    chol: Vec<T>,
    alpha: Vec<T>,
}

struct Prepared<T> {
    inputs: Vec<Vec<T>>,
    targets: Vec<T>,
    y_mean: T,
    y_scale: T,
}

fn prepare<T: Scalar>(points: &[Vec<T>], values: &[T]) -> Result<Prepared<T>, GpError> {
    if points.len() < 2 || values.len() < 2 {
        return Err(GpError::TooFewObservations(points.len().min(values.len())));
    }
    let dim = points[0].len();
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(GpError::DimensionMismatch { index: i, expected: dim, actual: p.len() });
        }
        if !values[i].is_finite() || p.iter().any(|v| !v.is_finite()) {
            return Err(GpError::NonFinite(i));
        }
    }
    let (inputs, raw) = merge_duplicates(&points[..values.len().min(points.len())], values);
    let n = T::lit(raw.len() as f64);
    let y_mean = raw.iter().fold(T::zero(), |a, &v| a + v) / n;
    let var = raw.iter().fold(T::zero(), |a, &v| a + (v - y_mean) * (v - y_mean)) / n;
    let y_scale = if var.sqrt() > T::lit(1e-12) { var.sqrt() } else { T::one() };
    let targets = raw.iter().map(|&v| (v - y_mean) / y_scale).collect();
    Ok(Prepared { inputs, targets, y_mean, y_scale })
}

/// Builds the correlation matrix (unit signal variance) for given
/// lengthscales.
fn correlation_matrix<T: Scalar>(inputs: &[Vec<T>], lengthscales: &[T]) -> Vec<T> {
    let n = inputs.len();
    let mut m = vec![T::zero(); n * n];
    for i in 0..n {
        m[i * n + i] = T::one();
        for j in 0..i {
            let c = matern52(scaled_sq_dist(&inputs[i], &inputs[j], lengthscales).sqrt());
            m[i * n + j] = c;
            m[j * n + i] = c;
        }
    }
    m
}

impl<T: Scalar> GpModel<T> {
    /// Builds a model with fixed hyperparameters.
    pub fn with_hyperparams(points: &[Vec<T>], values: &[T], hyper: GpHyperparams<T>) -> Result<Self, GpError> {
        let prep = prepare(points, values)?;
        let dim = prep.inputs[0].len();
        if hyper.lengthscales.len() != dim {
            return Err(GpError::DimensionMismatch { index: 0, expected: hyper.lengthscales.len(), actual: dim });
        }
        Self::build(prep, hyper)
    }

    /// Fits hyperparameters by maximizing the log marginal likelihood.
    pub fn fit<R: Rng + ?Sized>(
        points: &[Vec<T>],
        values: &[T],
        options: FitOptions,
        rng: &mut R,
    ) -> Result<Self, GpError> {
        let prep = prepare(points, values)?;
        let hyper = search_hyperparams(&prep.inputs, &prep.targets, options, rng);
        Self::build(prep, hyper)
    }

    fn build(prep: Prepared<T>, hyper: GpHyperparams<T>) -> Result<Self, GpError> {
        let n = prep.inputs.len();
        let corr = correlation_matrix(&prep.inputs, &hyper.lengthscales);
        let floor = T::lit(NOISE_VARIANCE_BOUNDS.0);
        let mut noise = hyper.noise_variance.max(floor);
        let chol = loop {
            let mut k: Vec<T> = corr.iter().map(|&c| c * hyper.signal_variance).collect();
            for i in 0..n {
                k[i * n + i] += noise;
            }
            if cholesky(&mut k, n) {
                break k;
            }
            noise = noise * T::lit(2.0);
            if noise > T::lit(MAX_JITTER) {
                return Err(GpError::IllConditioned(noise.as_f64()));
            }
        };
        let mut alpha = prep.targets.clone();
        forward_solve(&chol, n, &mut alpha);
        backward_solve(&chol, n, &mut alpha);
        Ok(Self {
            hyper,
            inputs: prep.inputs,
            targets: prep.targets,
            y_mean: prep.y_mean,
            y_scale: prep.y_scale,
            noise_used: noise,
            chol,
            alpha,
        })
    }

    pub fn hyperparams(&self) -> &GpHyperparams<T> {
        &self.hyper
    }

    pub fn dim(&self) -> usize {
        self.inputs[0].len()
    }

    /// Number of distinct training inputs after merging.
    pub fn num_points(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[Vec<T>] {
        &self.inputs
    }

    /// Noise variance actually used in the factorization (after any jitter
    /// escalation), in standardized units.
    pub fn effective_noise(&self) -> T {
        self.noise_used
    }

    /// Mean and standard deviation of the standardization applied to targets.
    pub fn target_standardization(&self) -> (T, T) {
        (self.y_mean, self.y_scale)
    }

    /// Training targets mapped back to original units.
    pub fn training_targets(&self) -> Vec<T> {
        self.targets.iter().map(|&t| self.y_mean + self.y_scale * t).collect()
    }

    /// Predictive mean and standard deviation of the latent function at `x`,
    /// in original target units.
    pub fn posterior(&self, x: &[T]) -> (T, T) {
        let n = self.inputs.len();
        let sf2 = self.hyper.signal_variance;
        let mut kstar: Vec<T> = self
            .inputs
            .iter()
            .map(|p| sf2 * matern52(scaled_sq_dist(x, p, &self.hyper.lengthscales).sqrt()))
            .collect();
        let mean = kstar.iter().zip(&self.alpha).fold(T::zero(), |a, (&k, &w)| a + k * w);
        forward_solve(&self.chol, n, &mut kstar);
        let explained = kstar.iter().fold(T::zero(), |a, &v| a + v * v);
        let var = (sf2 - explained).max(T::zero());
        (self.y_mean + self.y_scale * mean, self.y_scale * var.sqrt())
    }

    /// Log marginal likelihood of the standardized targets.
    pub fn log_marginal_likelihood(&self) -> T {
        let n = self.inputs.len();
        let fit = self.targets.iter().zip(&self.alpha).fold(T::zero(), |a, (&y, &w)| a + y * w);
        let logdet = (0..n).fold(T::zero(), |a, i| a + self.chol[i * n + i].ln());
        T::lit(-0.5) * fit - logdet - T::lit(0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln())
    }
}

/// Log marginal likelihood from a correlation matrix, or `-inf` if the
/// kernel matrix cannot be factorized.
fn lml_from_corr<T: Scalar>(corr: &[T], targets: &[T], sf2: T, sn2: T, scratch: &mut Vec<T>) -> f64 {
    let n = targets.len();
    scratch.clear();
    scratch.extend(corr.iter().map(|&c| c * sf2));
    for i in 0..n {
        scratch[i * n + i] += sn2;
    }
    if !cholesky(scratch, n) {
        return f64::NEG_INFINITY;
    }
    let mut z = targets.to_vec();
    forward_solve(scratch, n, &mut z);
    let fit = z.iter().fold(T::zero(), |a, &v| a + v * v);
    let logdet = (0..n).fold(T::zero(), |a, i| a + scratch[i * n + i].ln());
    let v = (T::lit(-0.5) * fit - logdet).as_f64() - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    if v.is_finite() {
        v
    } else {
        f64::NEG_INFINITY
    }
}

/// Cached pairwise geometry for fast likelihood evaluation while one
/// lengthscale varies.
struct LmlContext<'a, T> {
    targets: &'a [T],
    n: usize,
    /// Per-dimension squared coordinate differences, lower triangle packed.
    sqdiff: Vec<Vec<T>>,
    scratch: Vec<T>,
}

impl<'a, T: Scalar> LmlContext<'a, T> {
    fn new(inputs: &[Vec<T>], targets: &'a [T]) -> Self {
        let n = inputs.len();
        let dim = inputs[0].len();
        let sqdiff = (0..dim)
            .map(|d| {
                let mut v = Vec::with_capacity(n * (n - 1) / 2);
                for i in 0..n {
                    for j in 0..i {
                        let diff = inputs[i][d] - inputs[j][d];
                        v.push(diff * diff);
                    }
                }
                v
            })
            .collect();
        Self { targets, n, sqdiff, scratch: Vec::with_capacity(n * n) }
    }

    fn scaled_r2(&self, log_ls: &[f64]) -> Vec<T> {
        let mut r2 = vec![T::zero(); self.n * (self.n - 1) / 2];
        for (d, diffs) in self.sqdiff.iter().enumerate() {
            let inv = T::lit((-2.0 * log_ls[d]).exp());
            for (acc, &s) in r2.iter_mut().zip(diffs) {
                *acc += s * inv;
            }
        }
        r2
    }

    fn corr_from_r2(&self, r2: &[T]) -> Vec<T> {
        let n = self.n;
        let mut m = vec![T::zero(); n * n];
        let mut idx = 0;
        for i in 0..n {
            m[i * n + i] = T::one();
            for j in 0..i {
                let c = matern52(r2[idx].sqrt());
                m[i * n + j] = c;
                m[j * n + i] = c;
                idx += 1;
            }
        }
        m
    }

    fn lml(&mut self, corr: &[T], theta: &[f64]) -> f64 {
        let d = theta.len() - 2;
        let sf2 = T::lit(theta[d].exp());
        let sn2 = T::lit(theta[d + 1].exp());
        lml_from_corr(corr, self.targets, sf2, sn2, &mut self.scratch)
    }
}

fn log_bounds(index: usize, dim: usize) -> (f64, f64) {
    let (lo, hi) = if index < dim {
        LENGTHSCALE_BOUNDS
    } else if index == dim {
        SIGNAL_VARIANCE_BOUNDS
    } else {
        NOISE_VARIANCE_BOUNDS
    };
    (lo.ln(), hi.ln())
}

/// Maximizes `f` over `[lo, hi]` by golden-section search with `evals`
/// function evaluations; returns the best point seen and its value.
fn golden_section(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, evals: usize) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for _ in 2..evals.max(2) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
            if fd > best.1 {
                best = (d, fd);
            }
        }
    }
    best
}

/// Half-widths (natural-log units) of the line-search bracket per sweep.
fn bracket_half_width(sweep: usize) -> f64 {
    2.0 / (1 << sweep) as f64
}

fn refine<T: Scalar>(ctx: &mut LmlContext<'_, T>, mut theta: Vec<f64>, options: FitOptions) -> (Vec<f64>, f64) {
    let dim = theta.len() - 2;
    let mut r2 = ctx.scaled_r2(&theta);
    let mut corr = ctx.corr_from_r2(&r2);
    let mut best = ctx.lml(&corr, &theta);
    for sweep in 0..options.sweeps {
        let w = bracket_half_width(sweep);
        for i in 0..theta.len() {
            let (blo, bhi) = log_bounds(i, dim);
            let lo = (theta[i] - w).max(blo);
            let hi = (theta[i] + w).min(bhi);
            if hi <= lo {
                continue;
            }
            if i < dim {
                // Vary one lengthscale: adjust r2 by that dimension's term.
                let cur_inv = (-2.0 * theta[i]).exp();
                let diffs = ctx.sqdiff[i].clone();
                let base: Vec<T> = r2
                    .iter()
                    .zip(&diffs)
                    .map(|(&r, &s)| (r - s * T::lit(cur_inv)).max(T::zero()))
                    .collect();
                let mut trial = theta.clone();
                let (x, fx) = golden_section(
                    |v| {
                        trial[i] = v;
                        let inv = T::lit((-2.0 * v).exp());
                        let r: Vec<T> = base.iter().zip(&diffs).map(|(&b, &s)| b + s * inv).collect();
                        let c = ctx.corr_from_r2(&r);
                        ctx.lml(&c, &trial)
                    },
                    lo,
                    hi,
                    options.line_evals,
                );
                if fx > best {
                    best = fx;
                    theta[i] = x;
                    let inv = T::lit((-2.0 * x).exp());
                    r2 = base.iter().zip(&diffs).map(|(&b, &s)| b + s * inv).collect();
                    corr = ctx.corr_from_r2(&r2);
                }
            } else {
                let mut trial = theta.clone();
                let (x, fx) = golden_section(
                    |v| {
                        trial[i] = v;
                        ctx.lml(&corr, &trial)
                    },
                    lo,
                    hi,
                    options.line_evals,
                );
                if fx > best {
                    best = fx;
                    theta[i] = x;
                }
            }
        }
    }
    (theta, best)
}

fn search_hyperparams<T: Scalar, R: Rng + ?Sized>(
    inputs: &[Vec<T>],
    targets: &[T],
    options: FitOptions,
    rng: &mut R,
) -> GpHyperparams<T> {
    let dim = inputs[0].len();
    if inputs.len() < 2 {
        return GpHyperparams::isotropic(dim, 1.0, 1.0, NOISE_VARIANCE_BOUNDS.0);
    }
    let mut ctx = LmlContext::new(inputs, targets);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..options.restarts.max(1) {
        let mut theta = Vec::with_capacity(dim + 2);
        for _ in 0..dim {
            theta.push(rng.random_range(0.1f64.ln()..3.0f64.ln()));
        }
        theta.push(rng.random_range(0.5f64.ln()..2.0f64.ln()));
        theta.push(rng.random_range(1e-5f64.ln()..1e-1f64.ln()));
        let (theta, value) = refine(&mut ctx, theta, options);
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((theta, value));
        }
    }
    let (theta, _) = best.expect("at least one restart");
    GpHyperparams::from_log(&theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matern_reference_values() {
        assert_eq!(matern52(0.0f64), 1.0);
        // (1 + sqrt5 + 5/3) e^{-sqrt5} at r = 1
        let expected = (1.0 + 5f64.sqrt() + 5.0 / 3.0) * (-(5f64.sqrt())).exp();
        assert!((matern52(1.0f64) - expected).abs() < 1e-15);
        assert!(matern52(50.0f64) < 1e-40);
    }

    #[test]
    fn cholesky_solves() {
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        assert!(cholesky(&mut a, 2));
        assert_eq!(a, vec![2.0, 0.0, 1.0, 2f64.sqrt()]);
        let mut b = vec![2.0, 5.0];
        forward_solve(&a, 2, &mut b);
        backward_solve(&a, 2, &mut b);
        // A x = [2, 5] -> x = [-0.5, 2]
        assert!((b[0] + 0.5).abs() < 1e-12 && (b[1] - 2.0).abs() < 1e-12);
        let mut bad = vec![1.0, 2.0, 2.0, 1.0];
        assert!(!cholesky(&mut bad, 2));
    }

    #[test]
    fn merge_rule() {
        let pts: Vec<Vec<f64>> = vec![vec![0.1, 0.2], vec![0.1 + 1e-12, 0.2], vec![0.5, 0.5]];
        let (p, v) = merge_duplicates(&pts, &[0.2, 0.4, 1.0]);
        assert_eq!(p.len(), 2);
        assert!((v[0] - 0.3).abs() < 1e-15);
        assert_eq!(v[1], 1.0);
    }

    #[test]
    fn too_few_observations() {
        let err = GpModel::<f64>::fit(&[vec![0.5]], &[1.0], FitOptions::default(), &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap_err();
        assert_eq!(err, GpError::TooFewObservations(1));
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, fx) = golden_section(|x| -(x - 0.3).powi(2), -2.0, 2.0, 40);
        assert!((x - 0.3).abs() < 1e-6 && fx > -1e-12);
    }

    #[test]
    fn constant_data_reverts_to_the_common_value() {
        let pts: Vec<Vec<f64>> = vec![vec![0.2, 0.2], vec![0.8, 0.7]];
        let model = GpModel::fit(&pts, &[0.42, 0.42], FitOptions::default(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let (mu, _) = model.posterior(&[0.0, 1.0]);
        assert!((mu - 0.42).abs() < 1e-12);
        let far = GpModel::with_hyperparams(&pts, &[0.42, 0.42], GpHyperparams::isotropic(2, 0.01, 1.0, 1e-6)).unwrap();
        assert!((far.posterior(&[0.5, 0.5]).0 - 0.42).abs() < 1e-12);
    }

    #[test]
    fn interpolates_at_training_points() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 5.0]).collect();
        let ys: Vec<f64> = pts.iter().map(|p| (3.0 * p[0]).sin()).collect();
        let model = GpModel::with_hyperparams(&pts, &ys, GpHyperparams::isotropic(1, 0.3, 1.0, 1e-6)).unwrap();
        for (p, y) in pts.iter().zip(&ys) {
            let (mu, sigma) = model.posterior(p);
            assert!((mu - y).abs() < 1e-4);
            assert!(sigma <= 1e-3, "sigma {sigma}");
        }
    }

    #[test]
    fn prior_reversion_far_from_data() {
        let pts: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![0.1, 0.0], vec![0.0, 0.1]];
        let ys = [1.0, -1.0, 0.5];
        let hyper = GpHyperparams::isotropic(2, 0.01, 1.7, 1e-6);
        let model = GpModel::with_hyperparams(&pts, &ys, hyper).unwrap();
        let (mean, scale) = model.target_standardization();
        let (mu, sigma) = model.posterior(&[0.9, 0.9]);
        assert!((mu - mean).abs() < 1e-9);
        let var_std = (sigma / scale).powi(2);
        assert!((var_std / 1.7 - 1.0).abs() < 0.01);
    }

    #[test]
    fn mirror_symmetry() {
        let pts: Vec<Vec<f64>> = vec![vec![0.2], vec![0.8]];
        let model = GpModel::with_hyperparams(&pts, &[0.3, 0.3], GpHyperparams::isotropic(1, 0.2, 1.0, 1e-4)).unwrap();
        for x in [0.0, 0.1, 0.35, 0.5] {
            let a = model.posterior(&[x]);
            let b = model.posterior(&[1.0 - x]);
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
    }

    #[test]
    fn works_in_f32() {
        let pts: Vec<Vec<f32>> = (0..5).map(|i| vec![i as f32 / 4.0, 0.5]).collect();
        let ys: Vec<f32> = pts.iter().map(|p| p[0] * p[0]).collect();
        let model = GpModel::fit(&pts, &ys, FitOptions { restarts: 2, ..Default::default() }, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let (mu, sigma) = model.posterior(&[0.5, 0.5]);
        assert!((mu - 0.25).abs() < 0.05 && sigma >= 0.0);
    }

    #[test]
    fn fitted_lml_beats_random_hyperparameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Vec<f64>> = (0..15).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let ys: Vec<f64> = pts.iter().map(|p| (4.0 * p[0]).sin() + 0.1 * p[1]).collect();
        let fitted = GpModel::fit(&pts, &ys, FitOptions::default(), &mut rng).unwrap();
        for ls in [0.05, 0.3, 1.0, 5.0] {
            let fixed = GpModel::with_hyperparams(&pts, &ys, GpHyperparams::isotropic(2, ls, 1.0, 1e-3)).unwrap();
            assert!(fitted.log_marginal_likelihood() >= fixed.log_marginal_likelihood());
        }
        // The irrelevant second input should get the longer lengthscale.
        let ls = &fitted.hyperparams().lengthscales;
        assert!(ls[1] > ls[0], "{ls:?}");
    }
}
