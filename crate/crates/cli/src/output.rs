//! Task artifacts: the JSON payload and report, CSV series and SVG plots.
//!
//! `payload.json` is timing-free and byte-reproducible for a fixed config;
//! `report.json` is the same document plus wall-clock timings. Plots are
//! rendered from the CSV files after they are written, never from memory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }

    /// `value <= limit`, failing on NaN.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(name, value <= limit, format!("{value:e} <= {limit:e}"))
    }

    /// `value >= limit`, failing on NaN.
    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(name, value >= limit, format!("{value:e} >= {limit:e}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x: usize,
    pub ys: Vec<usize>,
    pub log_y: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub plot: Option<PlotSpec>,
}

impl Series {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            plot: None,
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Plots columns `ys` against column `x`.
    pub fn with_plot(mut self, title: &str, x: usize, ys: &[usize], log_y: bool) -> Self {
        self.plot = Some(PlotSpec {
            title: title.into(),
            x,
            ys: ys.to_vec(),
            log_y,
        });
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct TaskOutput {
    pub result: Value,
    pub checks: Vec<Check>,
    pub series: Vec<Series>,
}

impl TaskOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub fn payload(task: &str, cfg: &RunConfig, out: &TaskOutput, error: Option<&str>) -> Value {
    let mut v = json!({
        "task": task,
        "tool_version": TOOL_VERSION,
        "config": cfg,
        "verdict": if out.passed() && error.is_none() { "pass" } else { "fail" },
        "checks": out.checks,
        "result": out.result,
        "series": out.series.iter().map(|s| format!("{}.csv", s.name)).collect::<Vec<_>>(),
    });
    if let Some(e) = error {
        v["error"] = json!(e);
    }
    v
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub phase: String,
    pub seconds: f64,
}

/// Writes every artifact under `dir` and returns the paths written.
pub fn write_artifacts(
    dir: &Path,
    payload: &Value,
    timings: &[Timing],
    series: &[Series],
    plots: bool,
) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let text = serde_json::to_string_pretty(payload).expect("payload serializes") + "\n";
    let p = dir.join("payload.json");
    fs::write(&p, &text)?;
    written.push(p);

    let mut report = payload.clone();
    report["timings"] = json!(timings);
    let p = dir.join("report.json");
    fs::write(&p, serde_json::to_string_pretty(&report).expect("report serializes") + "\n")?;
    written.push(p);

    for s in series {
        let csv_path = dir.join(format!("{}.csv", s.name));
        write_series_csv(&csv_path, s)?;
        written.push(csv_path.clone());
        if let (true, Some(spec)) = (plots, &s.plot) {
            let (columns, rows) = read_series_csv(&csv_path)?;
            let svg = render_svg(spec, &columns, &rows);
            let p = dir.join(format!("{}.svg", s.name));
            fs::write(&p, svg)?;
            written.push(p);
        }
    }
    Ok(written)
}

fn write_series_csv(path: &Path, s: &Series) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&s.columns)?;
    for row in &s.rows {
        w.write_record(row.iter().map(|v| nonharmonic::io::fmt(*v)))?;
    }
    w.flush()
}

pub fn read_series_csv(path: &Path) -> std::io::Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let columns = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
            .collect::<std::io::Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((columns, rows))
}

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Minimal line plot. Non-finite points and, on a log axis, nonpositive
/// points are dropped.
pub fn render_svg(spec: &PlotSpec, columns: &[String], rows: &[Vec<f64>]) -> String {
    let (w, h, m) = (640.0, 400.0, 60.0);
    let ty = |v: f64| if spec.log_y { v.log10() } else { v };
    let usable = |v: f64| v.is_finite() && (!spec.log_y || v > 0.0);
    let pts: Vec<Vec<(f64, f64)>> = spec
        .ys
        .iter()
        .map(|&c| {
            rows.iter()
                .filter(|r| r[spec.x].is_finite() && usable(r[c]))
                .map(|r| (r[spec.x], ty(r[c])))
                .collect()
        })
        .collect();
    let all = pts.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 <= 0.0 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 <= 0.0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        w / 2.0,
        escape(&spec.title)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{m} {m} V{} H{}" fill="none" stroke="black"/>"#,
        h - m,
        w - m
    );
    for (val, at) in [(x0, sx(x0)), (x1, sx(x1))] {
        let _ = writeln!(
            s,
            r#"<text x="{at:.1}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            h - m + 16.0,
            tick(val)
        );
    }
    for (val, at) in [(y0, sy(y0)), (y1, sy(y1))] {
        let label = if spec.log_y { format!("1e{val:.1}") } else { tick(val) };
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{at:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{label}</text>"#,
            m - 6.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        w / 2.0,
        h - 18.0,
        escape(&columns[spec.x])
    );
    for (i, (line, &c)) in pts.iter().zip(&spec.ys).enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        if !line.is_empty() {
            let d: Vec<String> = line
                .iter()
                .enumerate()
                .map(|(k, &(x, y))| format!("{}{:.2} {:.2}", if k == 0 { 'M' } else { 'L' }, sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<path d="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
                d.join(" ")
            );
            for &(x, y) in line {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{colour}"/>"#, sx(x), sy(y));
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{colour}">{}</text>"#,
            w - m - 140.0,
            m + 16.0 * i as f64,
            escape(&columns[c])
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
