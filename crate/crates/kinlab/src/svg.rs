//! Minimal self-contained SVG line plots: an axes box, tick labels, one
//! polyline per series and a small legend. No external assets, no scripts;
//! the CSVs remain the artifacts of record and these are reading aids.

use std::fmt::Write as _;

pub struct Series<'a> {
    pub name: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
    /// Draw point markers (scatter-style or to emphasize sparse samples).
    pub markers: bool,
    /// Connect the points with a polyline; off for pure scatters.
    pub line: bool,
}

pub struct Plot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub log_y: bool,
    pub series: Vec<Series<'a>>,
}

const W: f64 = 760.0;
const H: f64 = 480.0;
const ML: f64 = 72.0; // left margin
const MR: f64 = 24.0;
const MT: f64 = 40.0;
const MB: f64 = 56.0;

fn nice_ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let span = hi - lo;
    let raw = span / n as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    } * mag;
    let first = (lo / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut t = first;
    while t <= hi + 1e-9 * span {
        ticks.push(t);
        t += step;
    }
    ticks
}

fn fmt_tick(v: f64, log: bool) -> String {
    if log {
        return format!("1e{v:.0}");
    }
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if a >= 1e4 || a < 1e-3 {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    }
}

impl Plot<'_> {
    pub fn render(&self) -> String {
        // Transform data, dropping non-plottable points (log of <= 0).
        let mut tseries: Vec<(usize, Vec<(f64, f64)>)> = Vec::new();
        for (idx, s) in self.series.iter().enumerate() {
            let pts: Vec<(f64, f64)> = s
                .points
                .iter()
                .filter_map(|&(x, y)| {
                    if self.log_y {
                        (y > 0.0).then(|| (x, y.log10()))
                    } else {
                        Some((x, y))
                    }
                })
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .collect();
            tseries.push((idx, pts));
        }
        let all: Vec<(f64, f64)> = tseries.iter().flat_map(|(_, p)| p.iter().copied()).collect();
        let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !(x0 < x1) {
            x1 = x0 + 1.0;
        }
        if !(y0 < y1) {
            y1 = y0 + 1.0;
        }
        // A little headroom.
        let ypad = 0.05 * (y1 - y0);
        y0 -= ypad;
        y1 += ypad;

        let px = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
        let py = |y: f64| H - MB - (y - y0) / (y1 - y0) * (H - MT - MB);

        let mut svg = String::new();
        let _ = write!(
            svg,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
             viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
        );
        let _ = writeln!(svg, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>",
            (ML + W - MR) / 2.0,
            xml_escape(self.title)
        );

        // Axes box and ticks.
        let _ = writeln!(
            svg,
            "<rect x=\"{ML}\" y=\"{MT}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>",
            W - ML - MR,
            H - MT - MB
        );
        for t in nice_ticks(x0, x1, 6) {
            let x = px(t);
            let _ = writeln!(
                svg,
                "<line x1=\"{x:.1}\" y1=\"{}\" x2=\"{x:.1}\" y2=\"{}\" stroke=\"#444\"/>",
                H - MB,
                H - MB + 5.0
            );
            let _ = writeln!(
                svg,
                "<text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
                H - MB + 18.0,
                fmt_tick(t, false)
            );
        }
        for t in nice_ticks(y0, y1, 6) {
            let y = py(t);
            let _ = writeln!(
                svg,
                "<line x1=\"{}\" y1=\"{y:.1}\" x2=\"{ML}\" y2=\"{y:.1}\" stroke=\"#444\"/>",
                ML - 5.0
            );
            let _ = writeln!(
                svg,
                "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
                ML - 8.0,
                y + 4.0,
                fmt_tick(t, self.log_y)
            );
        }
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            (ML + W - MR) / 2.0,
            H - 12.0,
            xml_escape(self.x_label)
        );
        let ylab = if self.log_y {
            format!("log10 {}", self.y_label)
        } else {
            self.y_label.to_string()
        };
        let _ = writeln!(
            svg,
            "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>",
            (MT + H - MB) / 2.0,
            (MT + H - MB) / 2.0,
            xml_escape(&ylab)
        );

        // Series.
        for (idx, pts) in &tseries {
            let s = &self.series[*idx];
            if s.line && pts.len() > 1 {
                let mut d = String::new();
                for (x, y) in pts {
                    let _ = write!(d, "{:.2},{:.2} ", px(*x), py(*y));
                }
                let _ = writeln!(
                    svg,
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"/>",
                    d.trim_end(),
                    s.color
                );
            }
            if s.markers || pts.len() == 1 {
                for (x, y) in pts {
                    let _ = writeln!(
                        svg,
                        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.4\" fill=\"{}\"/>",
                        px(*x),
                        py(*y),
                        s.color
                    );
                }
            }
        }

        // Legend, top-right inside the axes box.
        for (i, s) in self.series.iter().enumerate() {
            let y = MT + 16.0 + 16.0 * i as f64;
            let x = W - MR - 170.0;
            let _ = writeln!(
                svg,
                "<line x1=\"{x}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{}\" stroke-width=\"1.6\"/>",
                x + 22.0,
                s.color
            );
            let _ = writeln!(
                svg,
                "<text x=\"{}\" y=\"{}\">{}</text>",
                x + 28.0,
                y + 4.0,
                xml_escape(s.name)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
