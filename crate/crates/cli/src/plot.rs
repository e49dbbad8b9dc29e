use std::fmt::Write as _;
use std::path::Path;

use hintgrid::harness::{format_frames, MetricPoint};

pub struct Series {
    pub name: String,
    pub points: Vec<MetricPoint>,
}

/// Parsed series plus the number of malformed lines skipped.
pub fn read_series(path: &Path) -> std::io::Result<(Vec<MetricPoint>, usize)> {
    let text = std::fs::read_to_string(path)?;
    let mut points = Vec::new();
    let mut bad = 0;
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<MetricPoint>(line) {
            Ok(p) => points.push(p),
            Err(e) => {
                log::warn!("{}:{}: skipping malformed line: {e}", path.display(), n + 1);
                bad += 1;
            }
        }
    }
    Ok((points, bad))
}

/// Legend name: the run directory when the file is the usual `metrics.jsonl`.
pub fn series_name(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    if stem == "metrics" {
        let mut parts = path
            .parent()
            .into_iter()
            .flat_map(|p| p.iter().rev().take(2))
            .filter_map(|s| s.to_str())
            .collect::<Vec<_>>();
        parts.reverse();
        if !parts.is_empty() {
            return parts.join("/");
        }
    }
    stem.to_string()
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Win rate against frames over `[0, budget] × [0, 1]`.
pub fn render_svg(series: &[Series], budget: u64) -> String {
    let (w, h) = (720.0, 440.0);
    let (left, right, top, bottom) = (64.0, 180.0, 24.0, 52.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let budget = budget.max(1) as f64;
    let sx = |f: u64| left + pw * (f as f64 / budget).min(1.0);
    let sy = |r: f64| top + ph * (1.0 - r.clamp(0.0, 1.0));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for i in 0..=5 {
        let r = i as f64 / 5.0;
        let y = sy(r);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{r:.1}</text>"##,
            left + pw,
            left - 6.0,
            y + 4.0
        );
    }
    for i in 0..=5 {
        let f = (budget * i as f64 / 5.0) as u64;
        let x = sx(f);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.1}" y1="{top}" x2="{x:.1}" y2="{:.1}" stroke="#eee"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"##,
            top + ph,
            top + ph + 16.0,
            format_frames(f)
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">frames</text>"#,
        left + pw / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">win rate</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, series) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = series
            .points
            .iter()
            .map(|p| format!("{:.1},{:.1}", sx(p.frames), sy(p.win_rate)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = top + 10.0 + 18.0 * i as f64;
        let lx = left + pw + 14.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&series.name)
        );
    }
    s.push_str("</svg>\n");
    s
}
