//! Run configuration: defaults, overlaid by a JSON config file, overlaid by
//! command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fxsearcher::fx::{StageSet, PARAM_COUNT};
use fxsearcher::optim::SearchConfig;
use fxsearcher::score::{DEFAULT_GUIDE_PROMPT, TEST_BACKEND_DIM};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const RUN_CONFIG_SCHEMA_VERSION: u32 = 1;
pub const BUILTIN_BACKEND: &str = "builtin-test";
pub const DEFAULT_OUT_DIR: &str = "fxsearcher-out";

/// Fully resolved configuration of one optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub input_path: PathBuf,
    pub output_dir: PathBuf,
    pub target_prompt: String,
    pub guide_prompt: String,
    pub guide_enabled: bool,
    /// `builtin-test` or the base URL of an embedding service.
    pub backend: String,
    pub enabled_stages: Vec<String>,
    pub search: SearchConfig,
    /// Write real wall-clock times into trace.csv (they always go to
    /// trace.json).
    pub record_timing: bool,
    /// Fixed text vectors for the builtin backend, keyed by exact prompt.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub builtin_text_vectors: BTreeMap<String, Vec<f64>>,
}

impl RunConfig {
    pub fn is_builtin(&self) -> bool {
        self.backend == BUILTIN_BACKEND
    }

    pub fn stages(&self) -> Result<StageSet, CliError> {
        StageSet::parse_list(&self.enabled_stages.join(",")).map_err(|e| CliError::config("stages", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != RUN_CONFIG_SCHEMA_VERSION {
            return Err(CliError::config(
                "config",
                format!("schema_version {} (expected {RUN_CONFIG_SCHEMA_VERSION})", self.schema_version),
            ));
        }
        if self.target_prompt.trim().is_empty() {
            return Err(CliError::config("config", "target prompt must be non-empty"));
        }
        if self.guide_enabled && self.guide_prompt.trim().is_empty() {
            return Err(CliError::config("config", "guide prompt must be non-empty when guidance is enabled"));
        }
        if self.backend.trim().is_empty() {
            return Err(CliError::config("config", "backend must be builtin-test or a URL"));
        }
        self.stages()?;
        if self.search.dim != PARAM_COUNT {
            return Err(CliError::config("config", format!("search.dim must be {PARAM_COUNT}")));
        }
        self.search.validate().map_err(|e| CliError::config("config", e.to_string()))?;
        for (prompt, v) in &self.builtin_text_vectors {
            if v.len() != TEST_BACKEND_DIM || v.iter().any(|x| !x.is_finite()) {
                return Err(CliError::config(
                    "config",
                    format!("builtin_text_vectors[{prompt:?}] must hold {TEST_BACKEND_DIM} finite numbers"),
                ));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Search settings as they may appear in a config file; every field is
/// optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchOverrides {
    pub max_iterations: Option<usize>,
    pub patience: Option<usize>,
    pub init_samples: Option<usize>,
    pub acq_candidates: Option<usize>,
    pub acq_refine_steps: Option<usize>,
    pub seed: Option<u64>,
}

/// A config file or set of flags; unset fields fall through to the next
/// layer.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub schema_version: Option<u32>,
    pub input_path: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub target_prompt: Option<String>,
    pub guide_prompt: Option<String>,
    pub guide_enabled: Option<bool>,
    pub backend: Option<String>,
    pub enabled_stages: Option<Vec<String>>,
    #[serde(default)]
    pub search: SearchOverrides,
    pub record_timing: Option<bool>,
    pub builtin_text_vectors: Option<BTreeMap<String, Vec<f64>>>,
}

impl ConfigLayer {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))
    }

    /// Fields set in `top` win over fields set in `self`.
    pub fn overlay(self, top: ConfigLayer) -> ConfigLayer {
        ConfigLayer {
            schema_version: top.schema_version.or(self.schema_version),
            input_path: top.input_path.or(self.input_path),
            output_dir: top.output_dir.or(self.output_dir),
            target_prompt: top.target_prompt.or(self.target_prompt),
            guide_prompt: top.guide_prompt.or(self.guide_prompt),
            guide_enabled: top.guide_enabled.or(self.guide_enabled),
            backend: top.backend.or(self.backend),
            enabled_stages: top.enabled_stages.or(self.enabled_stages),
            search: SearchOverrides {
                max_iterations: top.search.max_iterations.or(self.search.max_iterations),
                patience: top.search.patience.or(self.search.patience),
                init_samples: top.search.init_samples.or(self.search.init_samples),
                acq_candidates: top.search.acq_candidates.or(self.search.acq_candidates),
                acq_refine_steps: top.search.acq_refine_steps.or(self.search.acq_refine_steps),
                seed: top.search.seed.or(self.search.seed),
            },
            record_timing: top.record_timing.or(self.record_timing),
            builtin_text_vectors: top.builtin_text_vectors.or(self.builtin_text_vectors),
        }
    }

    /// Fills remaining gaps with defaults. `random_seed` supplies the seed
    /// when no layer set one.
    pub fn resolve(self, random_seed: impl FnOnce() -> u64) -> Result<RunConfig, CliError> {
        let defaults = SearchConfig::default();
        let s = self.search;
        let cfg = RunConfig {
            schema_version: self.schema_version.unwrap_or(RUN_CONFIG_SCHEMA_VERSION),
            input_path: self.input_path.ok_or_else(|| CliError::config("config", "no input file (--input)"))?,
            output_dir: self.output_dir.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
            target_prompt: self.target_prompt.ok_or_else(|| CliError::config("config", "no target prompt (--prompt)"))?,
            guide_prompt: self.guide_prompt.unwrap_or_else(|| DEFAULT_GUIDE_PROMPT.to_string()),
            guide_enabled: self.guide_enabled.unwrap_or(true),
            backend: self.backend.ok_or_else(|| {
                CliError::config("config", "no backend (--backend-url URL or --builtin-backend)")
            })?,
            enabled_stages: self
                .enabled_stages
                .unwrap_or_else(|| StageSet::all().names().iter().map(|s| s.to_string()).collect()),
            search: SearchConfig {
                max_iterations: s.max_iterations.unwrap_or(defaults.max_iterations),
                patience: s.patience.unwrap_or(defaults.patience),
                init_samples: s.init_samples.unwrap_or(defaults.init_samples),
                acq_candidates: s.acq_candidates.unwrap_or(defaults.acq_candidates),
                acq_refine_steps: s.acq_refine_steps.unwrap_or(defaults.acq_refine_steps),
                seed: s.seed.unwrap_or_else(random_seed),
                dim: PARAM_COUNT,
            },
            record_timing: self.record_timing.unwrap_or(false),
            builtin_text_vectors: self.builtin_text_vectors.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
