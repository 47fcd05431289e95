//! Minimal SVG line chart of a [`ComparisonTable`] with a log-scaled
//! probability axis.
//!
//! The output depends only on the table, so rendering a table read back from
//! its CSV reproduces the same bytes.

use std::fmt::Write;

use crate::table::{Column, ComparisonTable};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
/// Lowest decade shown; smaller probabilities are cut off.
const MIN_DECADE: i32 = -8;
/// Points per polyline before thinning kicks in.
const MAX_POINTS: usize = 600;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn band_of(name: &str) -> Option<&str> {
    name.strip_suffix("_lo").or_else(|| name.strip_suffix("_hi")).filter(|s| s.starts_with("sim_"))
}

fn dash(name: &str) -> &'static str {
    if name.starts_with("rep_") {
        " stroke-dasharray=\"8,4\""
    } else if name.starts_with("sim_") {
        " stroke-dasharray=\"2,3\""
    } else {
        ""
    }
}

/// 1, 2 or 5 times a power of ten, giving at most about eight intervals.
fn tick_step(span: f64) -> f64 {
    let raw = span / 8.0;
    let base = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].into_iter().map(|f| f * base).find(|s| *s >= raw).unwrap_or(10.0 * base)
}

struct Frame {
    t0: f64,
    t1: f64,
    floor: i32,
}

impl Frame {
    fn new(table: &ComparisonTable) -> Self {
        let times = table.times();
        let (t0, mut t1) = (times[0], times[times.len() - 1]);
        if t1 <= t0 {
            t1 = t0 + 1.0;
        }
        let smallest = table
            .columns()
            .iter()
            .flat_map(|c| c.values.iter().flatten())
            .copied()
            .filter(|v| *v > 0.0)
            .fold(f64::INFINITY, f64::min);
        let floor = if smallest.is_finite() {
            (smallest.log10().floor() as i32).clamp(MIN_DECADE, -1)
        } else {
            -1
        };
        Self { t0, t1, floor }
    }

    fn x(&self, t: f64) -> f64 {
        LEFT + (t - self.t0) / (self.t1 - self.t0) * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, p: f64) -> f64 {
        let frac = p.log10() / f64::from(self.floor);
        TOP + frac * (HEIGHT - TOP - BOTTOM)
    }

    fn visible(&self, p: f64) -> bool {
        p > 0.0 && p.log10() >= f64::from(self.floor)
    }
}

fn polylines(out: &mut String, frame: &Frame, times: &[f64], column: &Column, attrs: &str) {
    let stride = times.len().div_ceil(MAX_POINTS).max(1);
    let last = times.len() - 1;
    let mut segment: Vec<String> = Vec::new();
    let flush = |segment: &mut Vec<String>, out: &mut String| {
        if segment.len() > 1 {
            let _ = writeln!(out, "<polyline fill=\"none\"{attrs} points=\"{}\"/>", segment.join(" "));
        }
        segment.clear();
    };
    for i in (0..=last).filter(|i| i % stride == 0 || *i == last) {
        match column.values[i] {
            Some(p) if frame.visible(p) => {
                segment.push(format!("{:.2},{:.2}", frame.x(times[i]), frame.y(p.min(1.0))));
            }
            _ => flush(&mut segment, out),
        }
    }
    flush(&mut segment, out);
}

pub fn render_svg(table: &ComparisonTable) -> String {
    let frame = Frame::new(table);
    let times = table.times();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(out, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{LEFT}\" y=\"24\" font-size=\"14\">Batch completion time tail, lambda = {}</text>",
        escape(table.meta_value("lambda").unwrap_or("?"))
    );

    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let step = tick_step(frame.t1 - frame.t0);
    let first = (frame.t0 / step).ceil() as i64;
    let last = (frame.t1 / step + 1e-9).floor() as i64;
    for i in first..=last {
        let t = i as f64 * step;
        let x = frame.x(t);
        let _ = writeln!(out, "<line x1=\"{x:.2}\" y1=\"{y0}\" x2=\"{x:.2}\" y2=\"{y1}\" stroke=\"#e0e0e0\"/>");
        let label = format!("{:.*}", if step < 1.0 { (-step.log10().floor()) as usize } else { 0 }, t);
        let _ = writeln!(out, "<text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\">{label}</text>", y1 + 18.0);
    }
    let every = if frame.floor < -6 { 2 } else { 1 };
    for decade in (frame.floor..=0).rev().filter(|d| d % every == 0) {
        let y = frame.y(10f64.powi(decade));
        let _ = writeln!(out, "<line x1=\"{x0}\" y1=\"{y:.2}\" x2=\"{x1}\" y2=\"{y:.2}\" stroke=\"#e0e0e0\"/>");
        let _ = writeln!(out, "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">1e{decade}</text>", x0 - 6.0, y + 4.0);
    }
    let _ = writeln!(
        out,
        "<rect x=\"{x0}\" y=\"{y0}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        x1 - x0,
        y1 - y0
    );
    let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\">t</text>", (x0 + x1) / 2.0, HEIGHT - 8.0);
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">P(T &gt; t)</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    let mains: Vec<&Column> = table.columns().iter().filter(|c| band_of(&c.name).is_none()).collect();
    let color_of = |name: &str| {
        mains
            .iter()
            .position(|c| c.name == name)
            .map(|i| PALETTE[i % PALETTE.len()])
            .unwrap_or("#999999")
    };
    for column in table.columns() {
        match band_of(&column.name) {
            Some(prefix) => {
                let color = color_of(&format!("{prefix}_mid"));
                let attrs = format!(" stroke=\"{color}\" stroke-opacity=\"0.4\" stroke-width=\"0.8\"");
                polylines(&mut out, &frame, times, column, &attrs);
            }
            None => {
                let attrs = format!(" stroke=\"{}\" stroke-width=\"1.6\"{}", color_of(&column.name), dash(&column.name));
                polylines(&mut out, &frame, times, column, &attrs);
            }
        }
    }

    for (i, column) in mains.iter().enumerate() {
        let y = y0 + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{}\" stroke-width=\"1.6\"{}/>",
            x1 + 12.0,
            x1 + 40.0,
            color_of(&column.name),
            dash(&column.name)
        );
        let _ = writeln!(out, "<text x=\"{}\" y=\"{}\">{}</text>", x1 + 46.0, y + 4.0, escape(&column.name));
    }
    out.push_str("</svg>\n");
    out
}
