use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use fxsearcher::optim::trace::{parse_csv, summarize, TraceFile, TraceRow, TraceSummary};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportSummary {
    pub summary: TraceSummary,
    pub svg_path: PathBuf,
}

impl ReportSummary {
    pub fn lines(&self) -> Vec<String> {
        let s = &self.summary;
        vec![
            format!("evaluations: {}", s.evaluations),
            format!("best s_final: {}", s.best_s_final),
            format!("best iteration: {}", s.best_iteration),
            format!("stop reason: {}", s.stop_reason.map(|r| r.as_str()).unwrap_or("unknown")),
            format!("plot: {}", self.svg_path.display()),
        ]
    }
}

/// Locates trace.csv: `path` may be the CSV itself or a run directory.
fn csv_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join("trace.csv")
    } else {
        path.to_path_buf()
    }
}

/// Reads a trace (plus its trace.json sidecar when present), writes an SVG
/// plot of best-so-far score against iteration and returns the summary.
pub fn cmd_report(path: &Path, svg_out: Option<&Path>) -> Result<ReportSummary, CliError> {
    let csv = csv_path(path);
    let text = fs::read_to_string(&csv)
        .map_err(|e| CliError::config("load-trace", format!("{}: {e}", csv.display())))?;
    let rows = parse_csv(&text).map_err(|e| CliError::config("load-trace", format!("{}: {e}", csv.display())))?;
    let sidecar_path = csv.with_extension("json");
    let sidecar = if sidecar_path.exists() {
        let text = fs::read_to_string(&sidecar_path)
            .map_err(|e| CliError::config("load-trace", format!("{}: {e}", sidecar_path.display())))?;
        Some(
            TraceFile::from_json(&text)
                .map_err(|e| CliError::config("load-trace", format!("{}: {e}", sidecar_path.display())))?,
        )
    } else {
        None
    };
    let summary = summarize(&rows, sidecar.as_ref());
    let svg_path = svg_out.map(Path::to_path_buf).unwrap_or_else(|| csv.with_extension("svg"));
    fs::write(&svg_path, render_svg(&rows))
        .map_err(|e| CliError::io("write-plot", format!("{}: {e}", svg_path.display())))?;
    Ok(ReportSummary { summary, svg_path })
}

/// Line plot of best-so-far score (and each evaluation as a dot) against
/// iteration.
pub fn render_svg(rows: &[TraceRow]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const PAD: f64 = 48.0;
    let x_max = rows.iter().map(|r| r.iteration).max().unwrap_or(0).max(1) as f64;
    let (mut lo, mut hi) = rows
        .iter()
        .flat_map(|r| [r.s_final, r.best_so_far])
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let px = |i: f64| PAD + (W - 2.0 * PAD) * i / x_max;
    let py = |v: f64| H - PAD - (H - 2.0 * PAD) * (v - lo) / (hi - lo);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{PAD},{PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    for r in rows.iter().filter(|r| r.s_final.is_finite()) {
        let _ = writeln!(
            svg,
            r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="#9aa"/>"##,
            px(r.iteration as f64),
            py(r.s_final)
        );
    }
    let points: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.2},{:.2}", px(r.iteration as f64), py(r.best_so_far)))
        .collect();
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#c33" stroke-width="2"/>"##,
        points.join(" ")
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">iteration</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{hi:.4}</text>"#, PAD - 4.0, PAD + 4.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{lo:.4}</text>"#, PAD - 4.0, H - PAD);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, W - PAD, H - PAD + 16.0, x_max as usize);
    let _ = writeln!(svg, r#"<text x="{PAD}" y="24">best-so-far s_final</text>"#);
    svg.push_str("</svg>\n");
    svg
}
