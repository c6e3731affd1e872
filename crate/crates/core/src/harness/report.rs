//! CSV and SVG serialization of experiment reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Exact CSV header of every report file.
pub const CSV_HEADER: &str = "algorithm,lr,dim,steps,seed,k,mae,matthew_degree,runtime_ms";

/// Marker written in the metric columns of a failed run.
pub const FAILED: &str = "failed";

/// Metrics of one (algorithm, config) run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub algorithm: String,
    pub lr: f64,
    pub dim: usize,
    pub steps: u64,
    pub seed: u64,
    pub k: usize,
    pub mae: f64,
    pub matthew_degree: f64,
    pub runtime_ms: u64,
    /// Set when the run failed; metric fields are then NaN.
    pub failure: Option<String>,
}

impl MetricsReport {
    pub fn is_failed(&self) -> bool {
        self.failure.is_some()
    }

    /// CSV row without the runtime column, for determinism comparisons.
    pub fn deterministic_fields(&self) -> String {
        let row = self.csv_row();
        row[..row.rfind(',').expect("row has columns")].to_owned()
    }

    pub fn csv_row(&self) -> String {
        let metric = |v: f64| {
            if self.is_failed() {
                FAILED.to_owned()
            } else {
                v.to_string()
            }
        };
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.algorithm,
            self.lr,
            self.dim,
            self.steps,
            self.seed,
            self.k,
            metric(self.mae),
            metric(self.matthew_degree),
            self.runtime_ms
        )
    }
}

pub fn write_csv<W: Write>(reports: &[MetricsReport], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in reports {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

pub fn to_csv_string(reports: &[MetricsReport]) -> String {
    let mut buf = Vec::new();
    write_csv(reports, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("csv is utf-8")
}

fn field<T: FromStr>(record: &csv::StringRecord, idx: usize, line: usize) -> Result<T> {
    record
        .get(idx)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::data(format!("report line {line}: bad field {}", idx + 1)))
}

/// Parses a report CSV written by [`write_csv`].
pub fn read_csv<R: Read>(r: R) -> Result<Vec<MetricsReport>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(Error::data(format!("unexpected report header `{header}`")));
    }
    let mut out = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = idx + 2;
        let failed = record.get(6) == Some(FAILED);
        let metric = |i: usize| -> Result<f64> {
            if failed {
                Ok(f64::NAN)
            } else {
                field(&record, i, line)
            }
        };
        out.push(MetricsReport {
            algorithm: record.get(0).unwrap_or_default().to_owned(),
            lr: field(&record, 1, line)?,
            dim: field(&record, 2, line)?,
            steps: field(&record, 3, line)?,
            seed: field(&record, 4, line)?,
            k: field(&record, 5, line)?,
            mae: metric(6)?,
            matthew_degree: metric(7)?,
            runtime_ms: field(&record, 8, line)?,
            failure: failed.then(|| FAILED.to_owned()),
        });
    }
    Ok(out)
}

/// Which metric an SVG chart plots on its y axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartMetric {
    Mae,
    MatthewDegree,
}

impl ChartMetric {
    fn label(&self) -> &'static str {
        match self {
            ChartMetric::Mae => "MAE (stars)",
            ChartMetric::MatthewDegree => "Degree of Matthew Effect",
        }
    }

    fn slug(&self) -> &'static str {
        match self {
            ChartMetric::Mae => "mae",
            ChartMetric::MatthewDegree => "matthew",
        }
    }

    fn value(&self, r: &MetricsReport) -> f64 {
        match self {
            ChartMetric::Mae => r.mae,
            ChartMetric::MatthewDegree => r.matthew_degree,
        }
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 7] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#7f7f7f"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn padded_range(lo: f64, hi: f64, pad: f64) -> (f64, f64) {
    if hi > lo {
        let margin = (hi - lo) * 0.05;
        (lo - margin, hi + margin)
    } else {
        (lo - pad, hi + pad)
    }
}

/// Line chart of `metric` against learning rate (log scale), one polyline
/// per algorithm in order of first appearance. Failed runs are skipped.
pub fn render_svg(reports: &[MetricsReport], metric: ChartMetric) -> String {
    let mut series: Vec<(&str, Vec<(f64, f64)>)> = Vec::new();
    for r in reports.iter().filter(|r| !r.is_failed() && r.lr > 0.0) {
        let point = (r.lr.log10(), metric.value(r));
        match series.iter_mut().find(|(name, _)| *name == r.algorithm) {
            Some((_, points)) => points.push(point),
            None => series.push((&r.algorithm, vec![point])),
        }
    }
    for (_, points) in &mut series {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let all = series.iter().flat_map(|(_, p)| p.iter());
    let (x_lo, x_hi) = all.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    let (y_lo, y_hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    let (x_lo, x_hi) = if x_lo.is_finite() { padded_range(x_lo, x_hi, 0.5) } else { (-4.0, 0.0) };
    let (y_lo, y_hi) = if y_lo.is_finite() { padded_range(y_lo, y_hi, 0.5) } else { (0.0, 1.0) };

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| TOP + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, "<title>{} vs learning rate</title>", metric.label());
    let _ = writeln!(
        svg,
        "<desc>x axis: SGD learning rate (log10), assumed to be the swept variable. \
         Degree of Matthew Effect: |OLS slope| of ln(count) against ln(rank) over top-K \
         recommendation counts. Heuristic baselines (global_mean, user_mean, item_mean, \
         random_uniform) are stand-ins.</desc>"
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<g stroke="black" stroke-width="1"><line x1="{LEFT}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{b}"/></g>"#,
        b = TOP + plot_h,
        r = LEFT + plot_w
    );

    let mut decade = x_lo.ceil() as i32;
    while f64::from(decade) <= x_hi {
        let x = sx(f64::from(decade));
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{t}" stroke="black"/><text x="{x:.2}" y="{l}" text-anchor="middle">1e{decade}</text>"#,
            b = TOP + plot_h,
            t = TOP + plot_h + 5.0,
            l = TOP + plot_h + 20.0
        );
        decade += 1;
    }
    for tick in 0..=4 {
        let y = y_lo + (y_hi - y_lo) * f64::from(tick) / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{py:.2}" text-anchor="end">{y:.3}</text>"#,
            x = LEFT - 6.0,
            py = sy(y) + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{x:.2}" y="{y}" text-anchor="middle">learning rate</text>"#,
        x = LEFT + plot_w / 2.0,
        y = HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{y:.2}" text-anchor="middle" transform="rotate(-90 15 {y:.2})">{}</text>"#,
        escape(metric.label()),
        y = TOP + plot_h / 2.0
    );

    for (idx, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let coords: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = TOP + 15.0 + 18.0 * idx as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx}" y="{ry}" width="12" height="4" fill="{color}"/><text x="{tx}" y="{ly}">{}</text>"#,
            escape(name),
            ry = ly - 6.0,
            tx = lx + 18.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Svg,
    Both,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "svg" => Ok(ReportFormat::Svg),
            "both" => Ok(ReportFormat::Both),
            other => Err(Error::usage(format!("unknown report format `{other}`"))),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::data(format!("cannot write {}: {e}", path.display())))
}

/// Writes reports next to `base`: `base.csv` and/or `base_mae.svg` and
/// `base_matthew.svg`. Returns the paths written.
pub fn emit_report(reports: &[MetricsReport], format: ReportFormat, base: &Path) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(Error::usage("no reports to emit"));
    }
    let mut written = Vec::new();
    if matches!(format, ReportFormat::Csv | ReportFormat::Both) {
        let path = base.with_extension("csv");
        write_file(&path, &to_csv_string(reports))?;
        written.push(path);
    }
    if matches!(format, ReportFormat::Svg | ReportFormat::Both) {
        let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
        for metric in [ChartMetric::Mae, ChartMetric::MatthewDegree] {
            let path = base.with_file_name(format!("{stem}_{}.svg", metric.slug()));
            write_file(&path, &render_svg(reports, metric))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Best (lowest MAE) successful report per algorithm.
pub fn best_by_algorithm(reports: &[MetricsReport]) -> BTreeMap<&str, &MetricsReport> {
    let mut best: BTreeMap<&str, &MetricsReport> = BTreeMap::new();
    for r in reports.iter().filter(|r| !r.is_failed()) {
        best.entry(&r.algorithm)
            .and_modify(|b| {
                if r.mae < b.mae {
                    *b = r;
                }
            })
            .or_insert(r);
    }
    best
}
