//! Minimal static line-chart writer.
//!
//! Each panel is a `<g class="panel">` carrying its axis ranges as `data-x-min`, `data-x-max`,
//! `data-y-min`, `data-y-max`. Vertical guides use `class="guide <name>"`, point markers
//! `class="marker <name>"`.

use std::fmt::Write;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const MAIN_W: f64 = 720.0;
const MAIN_H: f64 = 400.0;
const INSET_H: f64 = 240.0;
const MARGIN: (f64, f64, f64, f64) = (64.0, 24.0, 36.0, 48.0); // left, right, top, bottom

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

impl Series {
    pub fn new(label: &str, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points, dashed: false }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Guide {
    pub x: f64,
    pub label: String,
    pub class: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub x: f64,
    pub y: f64,
    pub label: String,
    pub class: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Fixed x range; the data range otherwise.
    pub x_range: Option<(f64, f64)>,
    pub series: Vec<Series>,
    pub guides: Vec<Guide>,
    pub markers: Vec<Marker>,
}

impl Panel {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Default::default() }
    }

    pub fn x_range(mut self, lo: f64, hi: f64) -> Self {
        self.x_range = Some((lo, hi));
        self
    }

    pub fn series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn guide(mut self, x: f64, label: &str, class: &str) -> Self {
        self.guides.push(Guide { x, label: label.into(), class: class.into() });
        self
    }

    pub fn marker(mut self, x: f64, y: f64, label: &str, class: &str) -> Self {
        self.markers.push(Marker { x, y, label: label.into(), class: class.into() });
        self
    }

    fn ranges(&self) -> ((f64, f64), (f64, f64)) {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for &(x, y) in &s.points {
                if !(x.is_finite() && y.is_finite()) {
                    continue;
                }
                if let Some((lo, hi)) = self.x_range {
                    if x < lo || x > hi {
                        continue;
                    }
                }
                x0 = x0.min(x);
                x1 = x1.max(x);
                y0 = y0.min(y);
                y1 = y1.max(y);
            }
        }
        let (x0, x1) = self.x_range.unwrap_or((x0, x1));
        (widen(x0, x1), widen(y0, y1))
    }
}

fn widen(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi > lo {
        return (lo, hi);
    }
    let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
    (lo - pad, hi + pad)
}

/// Up to about six round tick values inside `[lo, hi]`.
pub fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last)
        .map(|k| k as f64 * step)
        .map(|t| if t.abs() < 1e-12 * step { 0.0 } else { t.clamp(lo, hi) })
        .collect()
}

fn tick_label(t: f64) -> String {
    let s = format!("{t:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

/// A main panel with optional zoom panels laid out in a row below it.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub main: Panel,
    pub insets: Vec<Panel>,
}

impl Figure {
    pub fn single(main: Panel) -> Self {
        Self { main, insets: Vec::new() }
    }

    pub fn with_insets(main: Panel, insets: Vec<Panel>) -> Self {
        Self { main, insets }
    }

    pub fn render(&self) -> String {
        let height = MAIN_H + if self.insets.is_empty() { 0.0 } else { INSET_H };
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{MAIN_W}" height="{height}" viewBox="0 0 {MAIN_W} {height}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        render_panel(&mut out, &self.main, &Frame { x: 0.0, y: 0.0, w: MAIN_W, h: MAIN_H }, "main", true);
        let n = self.insets.len() as f64;
        for (i, p) in self.insets.iter().enumerate() {
            let w = MAIN_W / n;
            render_panel(&mut out, p, &Frame { x: i as f64 * w, y: MAIN_H, w, h: INSET_H }, &format!("inset-{i}"), false);
        }
        out.push_str("</svg>\n");
        out
    }
}

fn render_panel(out: &mut String, p: &Panel, f: &Frame, id: &str, legend: bool) {
    let ((x0, x1), (y0, y1)) = p.ranges();
    let (ml, mr, mt, mb) = MARGIN;
    let (px, py, pw, ph) = (f.x + ml, f.y + mt, f.w - ml - mr, f.h - mt - mb);
    let sx = |x: f64| px + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| py + ph - (y - y0) / (y1 - y0) * ph;
    let _ = writeln!(
        out,
        r#"<g class="panel" id="{id}" data-x-min="{x0:e}" data-x-max="{x1:e}" data-y-min="{y0:e}" data-y-max="{y1:e}">"#
    );
    let _ = writeln!(out, r#"<clipPath id="clip-{id}"><rect x="{px:.2}" y="{py:.2}" width="{pw:.2}" height="{ph:.2}"/></clipPath>"#);
    let _ = writeln!(out, r#"<rect x="{px:.2}" y="{py:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#);
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">{}</text>"#, px + pw / 2.0, f.y + 20.0, escape(&p.title));
    for t in ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, py + ph, py + ph + 4.0);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, py + ph + 16.0, tick_label(t));
    }
    for t in ticks(y0, y1) {
        let y = sy(t);
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{y:.2}" x2="{px:.2}" y2="{y:.2}" stroke="black"/>"#, px - 4.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, px - 6.0, y + 4.0, tick_label(t));
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, px + pw / 2.0, py + ph + 34.0, escape(&p.x_label));
    let (lx, ly) = (f.x + 14.0, py + ph / 2.0);
    let _ = writeln!(out, r#"<text x="{lx:.2}" y="{ly:.2}" text-anchor="middle" transform="rotate(-90 {lx:.2} {ly:.2})">{}</text>"#, escape(&p.y_label));
    let _ = writeln!(out, r#"<g clip-path="url(#clip-{id})">"#);
    for g in &p.guides {
        if !(g.x >= x0 && g.x <= x1) {
            continue;
        }
        let x = sx(g.x);
        let _ = writeln!(
            out,
            r##"<line class="guide {}" data-x="{:e}" x1="{x:.2}" y1="{py:.2}" x2="{x:.2}" y2="{:.2}" stroke="#888" stroke-dasharray="4 3"/>"##,
            escape(&g.class),
            g.x,
            py + ph
        );
        let _ = writeln!(out, r##"<text x="{:.2}" y="{:.2}" fill="#555">{}</text>"##, x + 3.0, py + 12.0, escape(&g.label));
    }
    for (i, s) in p.series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let dash = if s.dashed { r#" stroke-dasharray="6 3""# } else { "" };
        for run in s.points.split(|(x, y)| !(x.is_finite() && y.is_finite())) {
            if run.is_empty() {
                continue;
            }
            let pts: Vec<String> = run.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(
                out,
                r#"<polyline class="series" data-label="{}" points="{}" fill="none" stroke="{colour}" stroke-width="1.5"{dash}/>"#,
                escape(&s.label),
                pts.join(" ")
            );
        }
    }
    for m in &p.markers {
        let _ = writeln!(
            out,
            r#"<circle class="marker {}" data-x="{:e}" data-y="{:e}" cx="{:.2}" cy="{:.2}" r="4" fill="black"/>"#,
            escape(&m.class),
            m.x,
            m.y,
            sx(m.x),
            sy(m.y)
        );
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, sx(m.x) + 6.0, sy(m.y) - 6.0, escape(&m.label));
    }
    out.push_str("</g>\n");
    if legend {
        for (i, s) in p.series.iter().enumerate() {
            let y = py + 14.0 + 14.0 * i as f64;
            let x = px + pw - 120.0;
            let colour = PALETTE[i % PALETTE.len()];
            let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{colour}" stroke-width="2"/>"#, x + 18.0);
            let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x + 22.0, y + 4.0, escape(&s.label));
        }
    }
    out.push_str("</g>\n");
}
