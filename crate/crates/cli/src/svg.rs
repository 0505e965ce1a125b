//! Minimal deterministic SVG charts: fixed 800×500 canvas, polylines,
//! circle markers and round-number axis ticks.

use std::fmt::Write as _;

use crate::table::sig6;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn line(name: &str, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.to_string(), points, style: Style::Line }
    }

    pub fn markers(name: &str, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.to_string(), points, style: Style::Markers }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Labelled vertical reference lines.
    pub vlines: Vec<(String, f64)>,
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Default::default() }
    }

    pub fn render(&self) -> String {
        let xs = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).chain(self.vlines.iter().map(|v| v.1));
        let ys = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
        let (x_lo, x_hi) = padded_range(xs);
        let (y_lo, y_hi) = padded_range(ys);
        let x_ticks = nice_ticks(x_lo, x_hi);
        let y_ticks = nice_ticks(y_lo, y_hi);
        let (x_lo, x_hi) = (x_ticks[0].min(x_lo), x_ticks[x_ticks.len() - 1].max(x_hi));
        let (y_lo, y_hi) = (y_ticks[0].min(y_lo), y_ticks[y_ticks.len() - 1].max(y_hi));

        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let px = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
        let py = |y: f64| MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##);
        let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, escape(&self.title));
        let _ = writeln!(
            s,
            r##"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333333"/>"##
        );

        for &t in &x_ticks {
            let x = fmt(px(t));
            let base = MARGIN_TOP + plot_h;
            let _ = writeln!(s, r##"<line class="tick" x1="{x}" y1="{base}" x2="{x}" y2="{}" stroke="#333333"/>"##, base + 5.0);
            let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#, base + 18.0, sig6(t));
        }
        for &t in &y_ticks {
            let y = fmt(py(t));
            let _ = writeln!(s, r##"<line class="tick" x1="{}" y1="{y}" x2="{MARGIN_LEFT}" y2="{y}" stroke="#333333"/>"##, MARGIN_LEFT - 5.0);
            let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end" dominant-baseline="middle">{}</text>"#, MARGIN_LEFT - 8.0, sig6(t));
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
            MARGIN_TOP + plot_h / 2.0,
            escape(&self.y_label)
        );

        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            match series.style {
                Style::Line => {
                    let pts: Vec<String> =
                        series.points.iter().map(|&(x, y)| format!("{},{}", fmt(px(x)), fmt(py(y)))).collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                        pts.join(" ")
                    );
                }
                Style::Markers => {
                    for &(x, y) in &series.points {
                        let _ = writeln!(
                            s,
                            r#"<circle class="marker" cx="{}" cy="{}" r="4" fill="{color}"/>"#,
                            fmt(px(x)),
                            fmt(py(y))
                        );
                    }
                }
            }
            let ly = MARGIN_TOP + 10.0 + 18.0 * i as f64;
            let lx = WIDTH - MARGIN_RIGHT + 10.0;
            let _ = writeln!(s, r#"<rect x="{lx}" y="{}" width="12" height="4" fill="{color}"/>"#, ly - 2.0);
            let _ = writeln!(s, r#"<text x="{}" y="{ly}" dominant-baseline="middle">{}</text>"#, lx + 18.0, escape(&series.name));
        }

        for (label, x) in &self.vlines {
            let x_px = fmt(px(*x));
            let _ = writeln!(
                s,
                r##"<line class="vline" x1="{x_px}" y1="{MARGIN_TOP}" x2="{x_px}" y2="{}" stroke="#555555" stroke-dasharray="6 4"/>"##,
                MARGIN_TOP + plot_h
            );
            let _ = writeln!(s, r#"<text x="{x_px}" y="{}" text-anchor="middle">{}</text>"#, MARGIN_TOP - 4.0, escape(label));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - pad, hi + pad)
    }
}

/// Ticks at multiples of 1, 2 or 5 × 10ᵏ covering `[lo, hi]` with about
/// five intervals.
pub fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).floor() as i64;
    let last = (hi / step).ceil() as i64;
    // multiply the integer index rather than accumulate, so ticks stay round
    (first..=last).map(|i| i as f64 * step).map(|t| if t.abs() < step * 1e-9 { 0.0 } else { t }).collect()
}
