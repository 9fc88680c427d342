//! Report emission: aligned text tables, CSV and SVG figures.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::record::{Row, RunRecord};
use crate::error::{LabError, Result};
use crate::probes::fit::fit_log_log;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Csv,
    Svg,
}

impl FromStr for Format {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            _ => Err(LabError::Parameter(format!("unknown format `{s}` (expected csv, svg or table)"))),
        }
    }
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn sample_rows(record: &RunRecord) -> impl Iterator<Item = &Row> {
    record.rows().iter().filter(|r| r.sample_id.is_some())
}

/// Sample rows grouped by kind, in order of first appearance.
fn by_kind(record: &RunRecord) -> Vec<(String, Vec<&Row>)> {
    let mut out: Vec<(String, Vec<&Row>)> = Vec::new();
    for row in sample_rows(record) {
        match out.iter_mut().find(|(k, _)| *k == row.kind) {
            Some((_, rows)) => rows.push(row),
            None => out.push((row.kind.clone(), vec![row])),
        }
    }
    out
}

/// `(lambda, count, min, median, max)` of the ratio per dilation.
fn per_lambda(rows: &[&Row]) -> Vec<(f64, usize, f64, f64, f64)> {
    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for r in rows {
        if let (Some(l), Some(q)) = (r.lambda, r.ratio) {
            groups.entry(l.to_bits()).or_default().push(q);
        }
    }
    let mut out: Vec<_> = groups
        .into_iter()
        .map(|(l, mut qs)| {
            let min = qs.iter().copied().fold(f64::INFINITY, f64::min);
            let max = qs.iter().copied().fold(0.0, f64::max);
            (f64::from_bits(l), qs.len(), min, median(&mut qs), max)
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

pub fn render_table(record: &RunRecord) -> Result<String> {
    if record.is_empty() {
        return Err(LabError::EmptyRecord);
    }
    let mut t = String::new();
    let _ = writeln!(t, "experiment  {}", record.config.kind.name());
    let _ = writeln!(t, "config      {}", record.config_hash);
    let _ = writeln!(t, "seed        {}", record.config.seed);
    for (kind, rows) in by_kind(record) {
        let _ = writeln!(t, "\n{kind}: {} rows", rows.len());
        let _ = writeln!(t, "  {:>12} {:>6} {:>12} {:>12} {:>12}", "lambda", "n", "min", "median", "max");
        for (l, n, min, med, max) in per_lambda(&rows) {
            let _ = writeln!(t, "  {l:>12.4e} {n:>6} {min:>12.4e} {med:>12.4e} {max:>12.4e}");
        }
    }
    if !record.summary().is_empty() {
        let _ = writeln!(t, "\nsummary");
        let width = record.summary().iter().map(|s| s.name.len()).max().unwrap_or(0);
        for s in record.summary() {
            let _ = writeln!(t, "  {:<width$}  {:.6e}", s.name, s.value);
        }
    }
    if !record.flags().is_empty() {
        let _ = writeln!(t, "\nflags");
        for f in record.flags() {
            let _ = writeln!(t, "  {f}");
        }
    }
    if let Some(f) = record.failure() {
        let _ = writeln!(t, "\npartial run: {}", f.message);
    }
    Ok(t)
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    line: bool,
    color: &'static str,
}

struct Plot {
    title: String,
    x_label: &'static str,
    y_label: &'static str,
    x_log: bool,
    y_log: bool,
    series: Vec<Series>,
    annotation: Option<String>,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let vs: Vec<f64> = values
            .filter(|v| v.is_finite() && (!log || *v > 0.0))
            .map(|v| if log { v.log10() } else { v })
            .collect();
        let lo = vs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        };
        Self { log, lo, hi }
    }

    fn unit(&self, v: f64) -> Option<f64> {
        if !v.is_finite() || (self.log && v <= 0.0) {
            return None;
        }
        let v = if self.log { v.log10() } else { v };
        Some((v - self.lo) / (self.hi - self.lo))
    }

    /// Tick positions (in axis units) and labels.
    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            let step = ((b - a) / 6).max(1);
            (a..=b)
                .step_by(step as usize)
                .map(|k| ((k as f64 - self.lo) / (self.hi - self.lo), format!("1e{k}")))
                .collect()
        } else {
            (0..=4)
                .map(|i| {
                    let v = self.lo + (self.hi - self.lo) * i as f64 / 4.0;
                    (i as f64 / 4.0, format!("{v:.3}"))
                })
                .collect()
        }
    }
}

fn render_plot(p: &Plot) -> String {
    let all = || p.series.iter().flat_map(|s| s.points.iter().copied());
    let xa = Axis::new(all().map(|(x, _)| x), p.x_log);
    let ya = Axis::new(all().map(|(_, y)| y), p.y_log);
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let px = |u: f64| LEFT + u * pw;
    let py = |u: f64| TOP + (1.0 - u) * ph;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(&p.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for (u, label) in xa.ticks() {
        let x = px(u);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"##,
            TOP + ph,
            TOP + ph + 16.0
        );
    }
    for (u, label) in ya.ticks() {
        let y = py(u);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 18.0,
        escape(p.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(p.y_label)
    );
    let mut legend = 0;
    for series in &p.series {
        let pts: Vec<(f64, f64)> = series
            .points
            .iter()
            .filter_map(|&(x, y)| Some((px(xa.unit(x)?), py(ya.unit(y)?))))
            .collect();
        if series.line && pts.len() > 1 {
            let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                path.join(" "),
                series.color
            );
        } else {
            for (x, y) in &pts {
                let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{}"/>"#, series.color);
            }
        }
        if series.label.is_empty() {
            continue;
        }
        let ly = TOP + 16.0 + 16.0 * legend as f64;
        legend += 1;
        let lx = LEFT + pw - 150.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.2}" y="{:.2}" width="10" height="10" fill="{}"/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
            ly - 9.0,
            series.color,
            lx + 14.0,
            escape(&series.label)
        );
    }
    if let Some(a) = &p.annotation {
        let _ = writeln!(
            s,
            r#"<text class="annotation" x="{:.2}" y="{:.2}">{}</text>"#,
            LEFT + 10.0,
            TOP + ph - 10.0,
            escape(a)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn dilation_plot(kind: &str, rows: &[&Row]) -> Plot {
    let stats = per_lambda(rows);
    let pick = |f: fn(&(f64, usize, f64, f64, f64)) -> f64| stats.iter().map(|s| (s.0, f(s))).collect();
    Plot {
        title: format!("{kind}: ratio against dilation"),
        x_label: "lambda",
        y_label: "lhs / rhs",
        x_log: true,
        y_log: true,
        series: vec![
            Series {
                label: "samples".into(),
                points: rows.iter().filter_map(|r| Some((r.lambda?, r.ratio?))).collect(),
                line: false,
                color: "#999999",
            },
            Series {
                label: "max".into(),
                points: pick(|s| s.4),
                line: true,
                color: COLORS[1],
            },
            Series {
                label: "median".into(),
                points: pick(|s| s.3),
                line: true,
                color: COLORS[0],
            },
            Series {
                label: "min".into(),
                points: pick(|s| s.2),
                line: true,
                color: COLORS[2],
            },
        ],
        annotation: None,
    }
}

/// Left-hand sides against `delta`, one fitted line per sample, with the
/// summary slope as annotation.
fn slope_plot(kind: &str, rows: &[&Row], record: &RunRecord) -> Plot {
    let mut groups: BTreeMap<(usize, u64), Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        if let (Some(id), Some(l), Some(d), Some(lhs)) = (r.sample_id, r.lambda, r.delta, r.lhs) {
            groups.entry((id, l.to_bits())).or_default().push((d, lhs));
        }
    }
    let mut series = Vec::new();
    let mut fitted = Vec::new();
    for pts in groups.values() {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
        series.push(Series {
            label: String::new(),
            points: pts.clone(),
            line: false,
            color: "#999999",
        });
        if let Some(f) = fit_log_log(&x, &y) {
            let (lo, hi) = (
                x.iter().copied().fold(f64::INFINITY, f64::min),
                x.iter().copied().fold(0.0, f64::max),
            );
            let at = |d: f64| (d, 10f64.powf(f.intercept + f.slope * d.log10()));
            fitted.push(vec![at(lo), at(hi)]);
        }
    }
    for (i, pts) in fitted.into_iter().enumerate() {
        series.push(Series {
            label: if i == 0 { "log-log fits".into() } else { String::new() },
            points: pts,
            line: true,
            color: COLORS[0],
        });
    }
    series.retain(|s| !s.points.is_empty());
    let annotation = record.summary_value("min_slope").map(|m| match record.summary_value("predicted_slope") {
        Some(p) => format!("min fitted slope = {m} (predicted {p})"),
        None => format!("min fitted slope = {m}"),
    });
    Plot {
        title: format!("{kind}: left-hand side against delta"),
        x_label: "delta",
        y_label: "lhs",
        x_log: true,
        y_log: true,
        series,
        annotation,
    }
}

fn iteration_plot(groups: &[(String, Vec<&Row>)]) -> Plot {
    Plot {
        title: "Picard distances".into(),
        x_label: "iteration n",
        y_label: "d_(n+1)",
        x_log: false,
        y_log: true,
        series: groups
            .iter()
            .enumerate()
            .map(|(i, (kind, rows))| Series {
                label: kind.clone(),
                points: rows.iter().filter_map(|r| Some((r.sample_id? as f64, r.lhs?))).collect(),
                line: true,
                color: COLORS[i % COLORS.len()],
            })
            .collect(),
        annotation: None,
    }
}

fn quotient_plot(groups: &[(String, Vec<&Row>)]) -> Plot {
    Plot {
        title: "Lipschitz quotients".into(),
        x_label: "eps",
        y_label: "quotient",
        x_log: true,
        y_log: true,
        series: groups
            .iter()
            .enumerate()
            .map(|(i, (kind, rows))| Series {
                label: kind.clone(),
                points: rows.iter().filter_map(|r| Some((r.lambda?, r.ratio?))).collect(),
                line: true,
                color: COLORS[i % COLORS.len()],
            })
            .collect(),
        annotation: None,
    }
}

/// File names and contents of the figures for a record.
pub fn render_svgs(record: &RunRecord) -> Result<Vec<(String, String)>> {
    if record.is_empty() {
        return Err(LabError::EmptyRecord);
    }
    let groups = by_kind(record);
    let (solve, rest): (Vec<_>, Vec<_>) = groups.into_iter().partition(|(k, _)| k.starts_with("SOLVE_"));
    let (lip, probes): (Vec<_>, Vec<_>) = rest.into_iter().partition(|(k, _)| k.starts_with("LIPSCHITZ_"));
    let mut out = Vec::new();
    for (kind, rows) in &probes {
        let name = kind.to_ascii_lowercase();
        out.push((format!("{name}_dilation.svg"), render_plot(&dilation_plot(kind, rows))));
        let mut deltas: Vec<u64> = rows.iter().filter_map(|r| r.delta).map(f64::to_bits).collect();
        deltas.sort_unstable();
        deltas.dedup();
        if deltas.len() > 1 {
            out.push((format!("{name}_slope.svg"), render_plot(&slope_plot(kind, rows, record))));
        }
    }
    if !solve.is_empty() {
        out.push(("solve_distances.svg".into(), render_plot(&iteration_plot(&solve))));
    }
    if !lip.is_empty() {
        out.push(("lipschitz_quotients.svg".into(), render_plot(&quotient_plot(&lip))));
    }
    if out.is_empty() {
        return Err(LabError::EmptyRecord);
    }
    Ok(out)
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf> {
    std::fs::write(&path, text)?;
    Ok(path)
}

/// Writes `record.json` and the files of `format` into `dir`; returns the
/// paths written.
pub fn emit_report(record: &RunRecord, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    if record.is_empty() {
        return Err(LabError::EmptyRecord);
    }
    std::fs::create_dir_all(dir)?;
    let mut written = vec![write(dir.join("record.json"), &record.to_json()?)?];
    match format {
        Format::Table => written.push(write(dir.join("report.txt"), &render_table(record)?)?),
        Format::Csv => written.push(write(dir.join("records.csv"), &record.to_csv()?)?),
        Format::Svg => {
            for (name, svg) in render_svgs(record)? {
                written.push(write(dir.join(name), &svg)?);
            }
        }
    }
    Ok(written)
}
