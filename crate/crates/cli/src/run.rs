use std::fs;
use std::path::Path;

use fxsearcher::audio::{load_wav, save_wav, AudioBuffer, AudioError};
use fxsearcher::fx::{apply_chain, FxParams, StageSet, UnitVector};
use fxsearcher::optim::trace::{to_csv, TraceFile};
use fxsearcher::optim::{optimize, OptimizeError, SearchResult, StopReason};
use fxsearcher::score::{
    BackendError, BackendInfo, EmbeddingBackend, HttpBackend, PromptPair, ScoreBreakdown, ScoreError, Scorer,
    TestBackend, TEST_BACKEND_DIM,
};
use fxsearcher::Audio;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::CliError;

pub const RUN_RECORD_SCHEMA_VERSION: u32 = 1;

/// Contents of run.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: RunConfig,
    pub seed: u64,
    pub backend: BackendInfo,
    pub enabled_stages: Vec<String>,
    pub final_scores: ScoreBreakdown,
    pub best_iteration: usize,
    pub evaluations: usize,
    pub failed_evaluations: usize,
    pub stop_reason: StopReason,
    pub surrogate_fallbacks: usize,
    pub input_sample_rate: u32,
    pub input_channels: usize,
    pub input_frames: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn audio_error(stage: &'static str, e: AudioError) -> CliError {
    CliError::config(stage, e.to_string())
}

fn backend_error(stage: &'static str, e: ScoreError) -> CliError {
    match e {
        ScoreError::Backend(BackendError::Transport { .. }) => {
            CliError::backend(stage, format!("backend unreachable: {e}"))
        }
        ScoreError::Precondition(_) => CliError::config(stage, e.to_string()),
        other => CliError::backend(stage, other.to_string()),
    }
}

/// The embedding backend named by the config.
pub fn build_backend(cfg: &RunConfig) -> Result<Box<dyn EmbeddingBackend>, CliError> {
    if cfg.is_builtin() {
        let mut backend = TestBackend::new();
        for (prompt, v) in &cfg.builtin_text_vectors {
            let arr: [f64; TEST_BACKEND_DIM] = v
                .as_slice()
                .try_into()
                .map_err(|_| CliError::config("backend", format!("vector for {prompt:?} has wrong length")))?;
            backend = backend.with_text(prompt.clone(), arr);
        }
        Ok(Box::new(backend))
    } else {
        let http = HttpBackend::new(cfg.backend.clone()).map_err(|e| CliError::backend("backend", e.to_string()))?;
        Ok(Box::new(http))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io("write-output", format!("{}: {e}", path.display())))
}

fn render(input: &Audio, x: &[f64], stages: StageSet) -> Result<(FxParams, Audio), CliError> {
    let u = UnitVector::from_slice(x).map_err(|e| CliError::io("render", e.to_string()))?;
    let params = FxParams::decode(&u);
    let out = apply_chain(input, &params, stages);
    Ok((params, out))
}

fn write_traces(cfg: &RunConfig, result: &SearchResult) -> Result<(), CliError> {
    write_file(&cfg.output_dir.join("trace.csv"), &to_csv(&result.trace, cfg.record_timing))?;
    write_file(&cfg.output_dir.join("trace.json"), &TraceFile::from_result(&cfg.search, result).to_json())
}

/// Runs the search and writes transformed.wav, params.json, trace.csv,
/// trace.json and run.json into the output directory. `progress` receives
/// one line per evaluation.
pub fn cmd_optimize(cfg: &RunConfig, progress: &mut dyn FnMut(&str)) -> Result<RunRecord, CliError> {
    cfg.validate()?;
    let stages = cfg.stages()?;
    fs::create_dir_all(&cfg.output_dir).map_err(|e| {
        CliError::config("output", format!("cannot create {}: {e}", cfg.output_dir.display()))
    })?;
    let input: Audio = load_wav(&cfg.input_path).map_err(|e| audio_error("load-input", e))?;

    let scorer = Scorer::new(build_backend(cfg)?).map_err(|e| backend_error("backend", e))?;
    let prompts = PromptPair {
        target_prompt: cfg.target_prompt.clone(),
        guide_prompt: cfg.guide_prompt.clone(),
        guide_enabled: cfg.guide_enabled,
    };
    let embedded = scorer.embed_prompts(&prompts).map_err(|e| backend_error("embed-prompts", e))?;
    progress(&format!(
        "seed {} | backend {} | stages {}",
        cfg.search.seed,
        scorer.info().model_id,
        stages
    ));

    let max = cfg.search.max_iterations;
    let mut count = 0usize;
    let mut best = f64::NEG_INFINITY;
    let objective = |x: &[f64]| -> Result<ScoreBreakdown, String> {
        count += 1;
        let (_, audio) = render(&input, x, stages).map_err(|e| e.to_string())?;
        match scorer.score_audio(&audio, &embedded) {
            Ok(s) => {
                best = best.max(s.s_final);
                progress(&format!(
                    "eval {count:>3}/{max} s_target {:+.5} s_guide {:+.5} s_final {:+.5} best {:+.5}",
                    s.s_target, s.s_guide, s.s_final, best
                ));
                Ok(s)
            }
            Err(e) => {
                progress(&format!("eval {count:>3}/{max} failed: {e}"));
                Err(e.to_string())
            }
        }
    };
    let result = match optimize(&cfg.search, objective) {
        Ok(r) => r,
        Err(OptimizeError::InvalidConfig(m)) => return Err(CliError::config("config", m)),
        Err(OptimizeError::Aborted { consecutive, last_error, partial, failures }) => {
            match partial {
                Some(p) => write_traces(cfg, &p)?,
                None => {
                    write_file(&cfg.output_dir.join("trace.csv"), &to_csv(&[], cfg.record_timing))?;
                    write_file(
                        &cfg.output_dir.join("trace.json"),
                        &TraceFile::without_observations(&cfg.search, failures).to_json(),
                    )?;
                }
            }
            return Err(CliError::Aborted(format!(
                "{consecutive} consecutive evaluations failed; last error: {last_error}"
            )));
        }
    };

    let (params, transformed) = render(&input, &result.best_x, stages)?;
    save_wav(&transformed.cast::<f32>(), cfg.output_dir.join("transformed.wav"))
        .map_err(|e| CliError::io("write-output", e.to_string()))?;
    write_file(&cfg.output_dir.join("params.json"), &params.to_json())?;
    write_traces(cfg, &result)?;

    let record = RunRecord {
        schema_version: RUN_RECORD_SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        seed: cfg.search.seed,
        backend: scorer.info().clone(),
        enabled_stages: stages.names().iter().map(|s| s.to_string()).collect(),
        final_scores: result.best_score,
        best_iteration: result.best_iteration,
        evaluations: result.evaluations,
        failed_evaluations: result.failures.len(),
        stop_reason: result.stop_reason,
        surrogate_fallbacks: result.surrogate_fallbacks,
        input_sample_rate: input.sample_rate(),
        input_channels: input.num_channels(),
        input_frames: input.len(),
        warnings: scorer.flaky_warnings(),
    };
    write_file(
        &cfg.output_dir.join("run.json"),
        &serde_json::to_string_pretty(&record).expect("run record serializes"),
    )?;
    Ok(record)
}

/// Renders `input` through the chain described by a params file and writes
/// the result as float-32 WAV.
pub fn cmd_apply(input: &Path, params: &Path, output: &Path, stages: StageSet) -> Result<(), CliError> {
    let text = fs::read_to_string(params)
        .map_err(|e| CliError::config("load-params", format!("{}: {e}", params.display())))?;
    let params = FxParams::from_json(&text).map_err(|e| CliError::config("load-params", e.to_string()))?;
    let audio: AudioBuffer<f64> = load_wav(input).map_err(|e| audio_error("load-input", e))?;
    let out = apply_chain(&audio, &params, stages);
    save_wav(&out.cast::<f32>(), output).map_err(|e| CliError::io("write-output", e.to_string()))
}
