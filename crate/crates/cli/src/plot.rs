//! Minimal static SVG line charts.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Chart {
    pub title: String,
    pub subtitle: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Dashed vertical reference lines `(x, label)`.
    pub vlines: Vec<(f64, String)>,
    /// Dashed horizontal reference lines `(y, label)`.
    pub hlines: Vec<(f64, String)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Rounded tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 0.01 && v.abs() < 1e5) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

impl Chart {
    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut xs: Vec<f64> = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
        let mut ys: Vec<f64> = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).collect();
        xs.extend(self.vlines.iter().map(|v| v.0));
        ys.extend(self.hlines.iter().map(|h| h.0));
        xs.retain(|v| v.is_finite());
        ys.retain(|v| v.is_finite());
        let span = |v: &[f64]| {
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            match (lo.is_finite(), hi > lo) {
                (false, _) => (0.0, 1.0),
                (true, false) => (lo - 0.5, lo + 0.5),
                (true, true) => {
                    let pad = 0.05 * (hi - lo);
                    (lo - pad, hi + pad)
                }
            }
        };
        let (x0, x1) = span(&xs);
        let (y0, y1) = span(&ys);
        (x0, x1, y0, y1)
    }

    pub fn to_svg(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="white"/>"##);
        let _ = writeln!(s, r##"<text x="{}" y="20" font-size="15" text-anchor="middle">{}</text>"##, LEFT + pw / 2.0, escape(&self.title));
        if !self.subtitle.is_empty() {
            let _ = writeln!(s, r##"<text x="{}" y="37" fill="#555" text-anchor="middle">{}</text>"##, LEFT + pw / 2.0, escape(&self.subtitle));
        }
        let _ = writeln!(s, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"##);
        for t in ticks(x0, x1) {
            let x = sx(t);
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"##, TOP + ph, TOP + ph + 5.0);
            let _ = writeln!(s, r##"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"##, TOP + ph + 18.0, fmt_tick(t));
        }
        for t in ticks(y0, y1) {
            let y = sy(t);
            let _ = writeln!(s, r##"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"##, LEFT - 5.0);
            let _ = writeln!(s, r##"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"##, LEFT - 8.0, y + 4.0, fmt_tick(t));
        }
        let _ = writeln!(s, r##"<text x="{}" y="{}" text-anchor="middle">{}</text>"##, LEFT + pw / 2.0, HEIGHT - 15.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r##"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"##,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        for (x, label) in &self.vlines {
            let x = sx(*x);
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="#777" stroke-dasharray="5,4"/>"##, TOP + ph);
            let _ = writeln!(s, r##"<text x="{:.2}" y="{}" fill="#555">{}</text>"##, x + 4.0, TOP + 14.0, escape(label));
        }
        for (y, label) in &self.hlines {
            let y = sy(*y);
            let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#777" stroke-dasharray="5,4"/>"##, LEFT + pw);
            let _ = writeln!(s, r##"<text x="{}" y="{:.2}" fill="#555">{}</text>"##, LEFT + 4.0, y - 4.0, escape(label));
        }
        for (i, series) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let pts: Vec<String> = series
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            if pts.len() == 1 {
                let (cx, cy) = pts[0].split_once(',').unwrap();
                let _ = writeln!(s, r##"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"##);
            } else if !pts.is_empty() {
                let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"##, pts.join(" "));
            }
            let ly = TOP + 10.0 + 18.0 * i as f64;
            let lx = LEFT + pw + 12.0;
            let _ = writeln!(s, r##"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"##, lx + 20.0);
            let _ = writeln!(s, r##"<text x="{}" y="{}">{}</text>"##, lx + 26.0, ly + 4.0, escape(&series.name));
        }
        s.push_str("</svg>\n");
        s
    }
}
