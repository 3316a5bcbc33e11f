//! Minimal deterministic SVG line and bar charts.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SvgError {
    #[error("nothing to plot: {0}")]
    Empty(String),
    #[error("non-finite value in series {0}")]
    NonFinite(String),
}

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 450.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone, PartialEq)]
pub struct LineSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Two decimals keep output stable and small.
fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn label_num(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.3e}")
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">
<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>
<text x="{cx}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{t}</text>"#,
        w = WIDTH,
        h = HEIGHT,
        cx = num(WIDTH / 2.0),
        t = escape(title)
    );
}

fn axes(out: &mut String, y_lo: f64, y_hi: f64) {
    let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
    let _ = writeln!(out, r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, num(x0), num(y0), num(x1), num(y0));
    let _ = writeln!(out, r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, num(x0), num(y0), num(x0), num(y1));
    for t in 0..=4 {
        let v = y_lo + (y_hi - y_lo) * f64::from(t) / 4.0;
        let y = y0 - (y0 - y1) * f64::from(t) / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
            num(x0 - 6.0),
            num(y + 4.0),
            escape(&label_num(v))
        );
    }
}

/// Line chart with one polyline per series and a legend.
pub fn line_chart(title: &str, series: &[LineSeries]) -> Result<String, SvgError> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(SvgError::Empty(title.to_string()));
    }
    for s in series {
        if s.points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(SvgError::NonFinite(s.label.clone()));
        }
    }
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut xl, mut xh, mut yl, mut yh) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        xl = xl.min(x);
        xh = xh.max(x);
        yl = yl.min(y);
        yh = yh.max(y);
    }
    let (xl, xh) = padded(xl, xh);
    let (yl, yh) = padded(yl, yh);
    let px = |x: f64| MARGIN_LEFT + (x - xl) / (xh - xl) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT);
    let py = |y: f64| HEIGHT - MARGIN_BOTTOM - (y - yl) / (yh - yl) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM);

    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, yl, yh);
    for (v, anchor) in [(xl, "start"), (xh, "end")] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="{anchor}" font-family="sans-serif" font-size="11">{}</text>"#,
            num(px(v)),
            num(HEIGHT - MARGIN_BOTTOM + 18.0),
            escape(&label_num(v))
        );
    }
    for (i, s) in series.iter().enumerate() {
        if s.points.is_empty() {
            continue;
        }
        let colour = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{},{}", num(px(x)), num(py(y)))).collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN_TOP + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{colour}" font-family="sans-serif" font-size="12">{}</text>"#,
            num(WIDTH - MARGIN_RIGHT + 10.0),
            num(ly),
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Bar chart with one rect per category, baseline at zero.
pub fn bar_chart(title: &str, bars: &[(String, f64)]) -> Result<String, SvgError> {
    if bars.is_empty() {
        return Err(SvgError::Empty(title.to_string()));
    }
    if let Some((l, _)) = bars.iter().find(|(_, v)| !v.is_finite()) {
        return Err(SvgError::NonFinite(l.clone()));
    }
    let lo = bars.iter().map(|b| b.1).fold(0.0, f64::min);
    let hi = bars.iter().map(|b| b.1).fold(0.0, f64::max);
    let (lo, hi) = padded(lo, hi);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let py = |y: f64| HEIGHT - MARGIN_BOTTOM - (y - lo) / (hi - lo) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM);
    let slot = plot_w / bars.len() as f64;

    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, lo, hi);
    for (i, (label, v)) in bars.iter().enumerate() {
        let x = MARGIN_LEFT + slot * i as f64 + slot * 0.1;
        let (top, bottom) = (py(v.max(0.0)), py(v.min(0.0)));
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
            num(x),
            num(top),
            num(slot * 0.8),
            num(bottom - top),
            PALETTE[0]
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="10">{}</text>"#,
            num(x + slot * 0.4),
            num(HEIGHT - MARGIN_BOTTOM + 14.0 + 12.0 * (i % 2) as f64),
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}
