use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::geometry_lab::LemmaRecord;

use super::{summarize, Method, SummaryRow, TrialRecord};

pub const CSV_HEADER: &str = "scenario,n,trial,seed,method,rel_error,success,wall_ms";

/// A vertical line on the phase plot at a bound's measurement count.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundMarker {
    pub n: f64,
    pub label: String,
}

pub fn records_to_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6e},{},{:.3}",
            r.scenario, r.n, r.trial, r.seed, r.method, r.rel_error, r.success, r.wall_ms
        );
    }
    out
}

pub fn summaries_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("scenario,method,n,trials,successes,success_rate,success_std_error,mean_rel_error\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.4},{:.4},{:.6e}",
            r.scenario, r.method, r.n, r.trials, r.successes, r.success_rate, r.success_std_error, r.mean_rel_error
        );
    }
    out
}

pub fn lemmas_to_csv(records: &[LemmaRecord]) -> String {
    let mut out = String::from("check,parameters,empirical,bound,pass\n");
    for r in records {
        let _ = writeln!(out, "{},{},{:.6},{:.6},{}", r.check, r.parameters, r.empirical, r.bound, r.pass);
    }
    out
}

pub fn emit_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, records_to_csv(records))?;
    Ok(())
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const ERROR_FLOOR: f64 = 1e-12;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Mean relative error against `n`, one polyline per `(scenario, method)`,
/// on a log-scale error axis, with a dashed vertical line per marker.
pub fn svg_plot(records: &[TrialRecord], markers: &[BoundMarker]) -> String {
    let rows = summarize(records);
    let mut series: BTreeMap<(String, Method), Vec<(f64, f64)>> = BTreeMap::new();
    for r in &rows {
        series.entry((r.scenario.clone(), r.method)).or_default().push((r.n as f64, r.mean_rel_error.max(ERROR_FLOOR)));
    }

    let xs = rows.iter().map(|r| r.n as f64).chain(markers.iter().map(|m| m.n));
    let (mut x_lo, mut x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if !x_lo.is_finite() {
        x_lo = 0.0;
        x_hi = 1.0;
    }
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    let logs = rows.iter().map(|r| r.mean_rel_error.max(ERROR_FLOOR).log10());
    let (y_lo, y_hi) = logs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y), hi.max(y)));
    let (y_lo, y_hi) = if y_lo.is_finite() { (y_lo.floor(), y_hi.ceil().max(y_lo.floor() + 1.0)) } else { (-1.0, 0.0) };

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |e: f64| TOP + (y_hi - e.log10()) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ =
        writeln!(svg, r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#);

    let mut exp = y_lo as i32;
    while exp as f64 <= y_hi {
        let y = sy(10f64.powi(exp));
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">1e{exp}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            y + 4.0
        );
        exp += 1;
    }
    for i in 0..=5 {
        let x = x_lo + (x_hi - x_lo) * i as f64 / 5.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.0}</text>"#,
            sx(x),
            TOP + plot_h + 16.0,
            x
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">measurements n</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">mean relative error</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (i, ((scenario, method), pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(n, e)| format!("{:.1},{:.1}", sx(n), sy(e))).collect();
        let name = escape(&format!("{scenario}/{method}"));
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-series="{name}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let lx = LEFT + plot_w + 10.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{name}</text>"#,
            lx + 18.0,
            lx + 22.0,
            ly + 4.0
        );
    }

    for m in markers {
        let x = sx(m.n);
        let _ = writeln!(
            svg,
            r##"<line class="bound-marker" x1="{x:.1}" y1="{TOP}" x2="{x:.1}" y2="{:.1}" stroke="#555" stroke-dasharray="4 3"/><text x="{:.1}" y="{:.1}" fill="#555">{}</text>"##,
            TOP + plot_h,
            x + 3.0,
            TOP + 12.0,
            escape(&m.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn emit_svg_plot(records: &[TrialRecord], markers: &[BoundMarker], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, svg_plot(records, markers))?;
    Ok(())
}
