//! Trace files: a CSV of scores per evaluation and a JSON sidecar holding
//! every evaluated point.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{FailedEvaluation, Observation, SearchConfig, SearchResult, StopReason};

pub const TRACE_CSV_HEADER: &str = "iteration,wall_time_ms,s_target,s_guide,s_final,best_so_far";
pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace is empty")]
    Empty,
    #[error("unexpected trace header {0:?}")]
    Header(String),
    #[error("line {line}: {detail}")]
    Row { line: usize, detail: String },
    #[error("trace sidecar: {0}")]
    Json(#[from] serde_json::Error),
}

/// One parsed CSV row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub wall_time_ms: f64,
    pub s_target: f64,
    pub s_guide: f64,
    pub s_final: f64,
    pub best_so_far: f64,
}

/// Renders the CSV. Wall times are written as 0 unless `record_timing` is
/// set, so that seeded runs produce identical files.
pub fn to_csv(trace: &[Observation], record_timing: bool) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(TRACE_CSV_HEADER);
    out.push('\n');
    let mut best = f64::NEG_INFINITY;
    for o in trace {
        best = best.max(o.score.s_final);
        let t = if record_timing { o.wall_time_ms } else { 0.0 };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            o.iteration, t, o.score.s_target, o.score.s_guide, o.score.s_final, best
        );
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<TraceRow>, TraceError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(TraceError::Empty)?;
    if header.trim() != TRACE_CSV_HEADER {
        return Err(TraceError::Header(header.to_string()));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 6 {
            return Err(TraceError::Row { line: line_no, detail: format!("expected 6 fields, got {}", fields.len()) });
        }
        let num = |i: usize| -> Result<f64, TraceError> {
            fields[i]
                .parse::<f64>()
                .map_err(|e| TraceError::Row { line: line_no, detail: format!("field {i}: {e}") })
        };
        let iteration = fields[0]
            .parse::<usize>()
            .map_err(|e| TraceError::Row { line: line_no, detail: format!("iteration: {e}") })?;
        if rows.last().is_some_and(|r: &TraceRow| r.iteration >= iteration) {
            return Err(TraceError::Row { line: line_no, detail: "iterations must increase".into() });
        }
        rows.push(TraceRow {
            iteration,
            wall_time_ms: num(1)?,
            s_target: num(2)?,
            s_guide: num(3)?,
            s_final: num(4)?,
            best_so_far: num(5)?,
        });
    }
    if rows.is_empty() {
        return Err(TraceError::Empty);
    }
    Ok(rows)
}

/// The JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub schema_version: u32,
    pub config: SearchConfig,
    pub stop_reason: StopReason,
    pub evaluations: usize,
    /// None when no evaluation succeeded.
    pub best_iteration: Option<usize>,
    pub observations: Vec<Observation>,
    pub failures: Vec<FailedEvaluation>,
}

impl TraceFile {
    pub fn from_result(config: &SearchConfig, result: &SearchResult) -> Self {
        Self {
            schema_version: TRACE_SCHEMA_VERSION,
            config: config.clone(),
            stop_reason: result.stop_reason,
            evaluations: result.evaluations,
            best_iteration: Some(result.best_iteration),
            observations: result.trace.clone(),
            failures: result.failures.clone(),
        }
    }

    /// A sidecar for a search that failed before any evaluation succeeded.
    pub fn without_observations(config: &SearchConfig, failures: Vec<FailedEvaluation>) -> Self {
        Self {
            schema_version: TRACE_SCHEMA_VERSION,
            config: config.clone(),
            stop_reason: StopReason::Aborted,
            evaluations: failures.len(),
            best_iteration: None,
            observations: Vec::new(),
            failures,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TraceError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Summary used by the report command.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSummary {
    pub evaluations: usize,
    pub best_s_final: f64,
    pub best_iteration: usize,
    pub stop_reason: Option<StopReason>,
}

/// Summarizes parsed rows. The stop reason comes from the sidecar when
/// one is given.
pub fn summarize(rows: &[TraceRow], sidecar: Option<&TraceFile>) -> TraceSummary {
    let mut best = (f64::NEG_INFINITY, 0usize);
    for r in rows {
        if r.s_final > best.0 {
            best = (r.s_final, r.iteration);
        }
    }
    let last = rows.last().map(|r| r.iteration + 1).unwrap_or(0);
    TraceSummary {
        evaluations: sidecar.map(|s| s.evaluations).unwrap_or(last),
        best_s_final: best.0,
        best_iteration: best.1,
        stop_reason: sidecar.map(|s| s.stop_reason),
    }
}
