//! Bayesian optimization of a black-box score over the unit hypercube.
//!
//! A Gaussian-process surrogate ([`gp`]) is refit to all observations and
//! the next point maximizes Expected Improvement ([`acquisition`]). The loop
//! stops after `max_iterations` objective evaluations or once the incumbent
//! has not improved for `patience` consecutive evaluations.

pub mod acquisition;
pub mod gp;
pub mod trace;

use std::fmt::Display;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fx::PARAM_COUNT;
use crate::score::ScoreBreakdown;

pub use acquisition::{expected_improvement, propose_next, sobol_points, Proposal};
pub use gp::{FitOptions, GpError, GpHyperparams, GpModel};

/// Improvements at or below this do not reset the patience counter.
pub const IMPROVEMENT_TOLERANCE: f64 = 1e-6;
/// More consecutive failed evaluations than this abort the search.
pub const MAX_CONSECUTIVE_FAILURES: usize = 10;
/// Hyperparameters are refit on every iteration up to this many
/// observations, then every [`REFIT_INTERVAL`] iterations.
pub const REFIT_EVERY_ITERATION_UP_TO: usize = 50;
pub const REFIT_INTERVAL: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub max_iterations: usize,
    pub patience: usize,
    pub init_samples: usize,
    pub acq_candidates: usize,
    pub acq_refine_steps: usize,
    pub seed: u64,
    /// Dimension of the search space.
    pub dim: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            patience: 30,
            init_samples: 20,
            acq_candidates: 2048,
            acq_refine_steps: 50,
            seed: 0,
            dim: PARAM_COUNT,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        let bad = |m: String| Err(OptimizeError::InvalidConfig(m));
        if self.init_samples >= self.max_iterations {
            return bad(format!(
                "init_samples ({}) must be less than max_iterations ({})",
                self.init_samples, self.max_iterations
            ));
        }
        if self.patience < 1 {
            return bad("patience must be at least 1".into());
        }
        if self.acq_candidates < 1 {
            return bad("acq_candidates must be at least 1".into());
        }
        if self.dim < 1 || self.dim as u32 > sobol_burley::NUM_DIMENSIONS {
            return bad(format!("dim must be in 1..={}, got {}", sobol_burley::NUM_DIMENSIONS, self.dim));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub iteration: usize,
    pub x: Vec<f64>,
    pub score: ScoreBreakdown,
    /// Milliseconds since the search started, taken when the evaluation
    /// finished.
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedEvaluation {
    pub iteration: usize,
    pub x: Vec<f64>,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Budget,
    Patience,
    /// Too many consecutive failed evaluations.
    Aborted,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Budget => "budget",
            StopReason::Patience => "patience",
            StopReason::Aborted => "aborted",
        }
    }
}

impl Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_x: Vec<f64>,
    pub best_score: ScoreBreakdown,
    pub best_iteration: usize,
    pub trace: Vec<Observation>,
    pub failures: Vec<FailedEvaluation>,
    /// Total objective calls, failed ones included.
    pub evaluations: usize,
    pub stop_reason: StopReason,
    /// Proposals that fell back to a random point because the surrogate
    /// could not be fitted.
    pub surrogate_fallbacks: usize,
}

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("aborted after {consecutive} consecutive failed evaluations; last error: {last_error}")]
    Aborted {
        consecutive: usize,
        last_error: String,
        /// Everything observed before the abort, if anything succeeded.
        partial: Option<Box<SearchResult>>,
        failures: Vec<FailedEvaluation>,
    },
}

/// Builds the surrogate for the current observations, reusing `cached`
/// hyperparameters when a full refit is not due.
fn surrogate(
    trace: &[Observation],
    cached: &mut Option<GpHyperparams<f64>>,
    since_refit: &mut usize,
    rng: &mut ChaCha8Rng,
) -> Result<GpModel<f64>, GpError> {
    let xs: Vec<Vec<f64>> = trace.iter().map(|o| o.x.clone()).collect();
    let ys: Vec<f64> = trace.iter().map(|o| o.score.s_final).collect();
    let refit = trace.len() <= REFIT_EVERY_ITERATION_UP_TO || *since_refit + 1 >= REFIT_INTERVAL;
    if let (false, Some(h)) = (refit, cached.as_ref()) {
        *since_refit += 1;
        return GpModel::with_hyperparams(&xs, &ys, h.clone());
    }
    let model = GpModel::fit(&xs, &ys, FitOptions::default(), rng)?;
    *cached = Some(model.hyperparams().clone());
    *since_refit = 0;
    Ok(model)
}

/// Maximizes `objective` over `[0, 1]^dim`.
///
/// Evaluations run one at a time. A failed evaluation uses up budget and
/// counts as non-improving; more than [`MAX_CONSECUTIVE_FAILURES`] in a row
/// aborts. Identical config and objective give an identical trace.
pub fn optimize<F, E>(config: &SearchConfig, mut objective: F) -> Result<SearchResult, OptimizeError>
where
    F: FnMut(&[f64]) -> Result<ScoreBreakdown, E>,
    E: Display,
{
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let init_seed: u32 = rng.random();
    let design = sobol_points(config.init_samples, config.dim, init_seed);

    let start = Instant::now();
    let mut trace: Vec<Observation> = Vec::new();
    let mut failures: Vec<FailedEvaluation> = Vec::new();
    let mut best: Option<usize> = None;
    let mut reference = f64::NEG_INFINITY;
    let mut stale = 0usize;
    let mut consecutive_failures = 0usize;
    let mut cached: Option<GpHyperparams<f64>> = None;
    let mut since_refit = 0usize;
    let mut fallbacks = 0usize;
    let mut stop_reason = StopReason::Budget;

    for iteration in 0..config.max_iterations {
        let x = if iteration < design.len() {
            design[iteration].clone()
        } else if trace.len() < 2 {
            fallbacks += 1;
            (0..config.dim).map(|_| rng.random::<f64>()).collect()
        } else {
            match surrogate(&trace, &mut cached, &mut since_refit, &mut rng) {
                Ok(model) => {
                    let incumbent = trace[best.expect("trace is non-empty")].score.s_final;
                    propose_next(&model, incumbent, config.acq_candidates, config.acq_refine_steps, &mut rng).x
                }
                Err(_) => {
                    fallbacks += 1;
                    (0..config.dim).map(|_| rng.random::<f64>()).collect()
                }
            }
        };

        let outcome = match objective(&x) {
            Ok(s) if s.s_final.is_finite() && s.s_target.is_finite() && s.s_guide.is_finite() => Ok(s),
            Ok(s) => Err(format!("non-finite score {s:?}")),
            Err(e) => Err(e.to_string()),
        };
        match outcome {
            Ok(score) => {
                consecutive_failures = 0;
                let value = score.s_final;
                trace.push(Observation {
                    iteration,
                    x,
                    score,
                    wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
                });
                if best.is_none_or(|b| value > trace[b].score.s_final) {
                    best = Some(trace.len() - 1);
                }
                if value > reference + IMPROVEMENT_TOLERANCE {
                    reference = value;
                    stale = 0;
                } else {
                    stale += 1;
                }
            }
            Err(error) => {
                consecutive_failures += 1;
                stale += 1;
                failures.push(FailedEvaluation { iteration, x, error: error.clone() });
                if consecutive_failures > MAX_CONSECUTIVE_FAILURES {
                    let partial = best.map(|b| {
                        Box::new(SearchResult {
                            best_x: trace[b].x.clone(),
                            best_score: trace[b].score,
                            best_iteration: trace[b].iteration,
                            trace: trace.clone(),
                            failures: failures.clone(),
                            evaluations: iteration + 1,
                            stop_reason: StopReason::Aborted,
                            surrogate_fallbacks: fallbacks,
                        })
                    });
                    return Err(OptimizeError::Aborted {
                        consecutive: consecutive_failures,
                        last_error: error,
                        partial,
                        failures,
                    });
                }
            }
        }
        if stale >= config.patience {
            stop_reason = StopReason::Patience;
            break;
        }
    }

    let evaluations = trace.len() + failures.len();
    let Some(b) = best else {
        return Err(OptimizeError::Aborted {
            consecutive: consecutive_failures,
            last_error: failures.last().map(|f| f.error.clone()).unwrap_or_default(),
            partial: None,
            failures,
        });
    };
    Ok(SearchResult {
        best_x: trace[b].x.clone(),
        best_score: trace[b].score,
        best_iteration: trace[b].iteration,
        trace,
        failures,
        evaluations,
        stop_reason,
        surrogate_fallbacks: fallbacks,
    })
}
