//! CSV and SVG writers for experiment results.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::experiment::{Band, Envelope, ExperimentRecord};
use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "method,trial,epoch,error_l2,residual_l2,z_error_l2,cpu_seconds";
pub const BANDS_HEADER: &str = "method,epoch,median,min,max";
pub const ENVELOPE_HEADER: &str = "method,bound,epoch,envelope_l2";

fn num(v: f64) -> String {
    format!("{v:.15e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn trace_csv(records: &[ExperimentRecord]) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for r in records {
        for row in &r.trace.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.method,
                r.trial,
                row.epoch,
                opt(row.error),
                num(row.residual),
                opt(row.z_error),
                num(row.cpu_seconds)
            );
        }
    }
    s
}

pub fn bands_csv(bands: &[Band]) -> String {
    let mut s = String::from(BANDS_HEADER);
    s.push('\n');
    for b in bands {
        for (k, &e) in b.epochs.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                b.method,
                e,
                num(b.median[k]),
                num(b.min[k]),
                num(b.max[k])
            );
        }
    }
    s
}

pub fn envelopes_csv(envelopes: &[Envelope]) -> String {
    let mut s = String::from(ENVELOPE_HEADER);
    s.push('\n');
    for e in envelopes {
        for (k, &v) in e.values.iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{}", e.method, e.bound, k, num(v));
        }
    }
    s
}

pub fn write_trace_csv(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    write_text(path, &trace_csv(records))
}

pub fn write_bands_csv(bands: &[Band], path: &Path) -> Result<()> {
    write_text(path, &bands_csv(bands))
}

pub fn write_envelopes_csv(envelopes: &[Envelope], path: &Path) -> Result<()> {
    write_text(path, &envelopes_csv(envelopes))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotAxis {
    Epoch,
    CpuSeconds,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const DASHES: [&str; 6] = ["none", "8 4", "2 3", "10 3 2 3", "4 4", "1 1"];

/// Linear map from a data interval onto a pixel interval.
struct Scale {
    lo: f64,
    hi: f64,
    p0: f64,
    p1: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, p0: f64, p1: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self { lo, hi, p0, p1 }
    }

    fn map(&self, v: f64) -> f64 {
        self.p0 + (v - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)
    }
}

/// Renders each band as a translucent min–max polygon under a median
/// polyline. With `log_y` the error axis is `log10`; nonpositive values are
/// clamped to the smallest positive value in the data.
pub fn render_svg(bands: &[Band], axis: PlotAxis, log_y: bool) -> Result<String> {
    if bands.is_empty() || bands.iter().all(|b| b.epochs.is_empty()) {
        return Err(Error::EmptyInput("bands"));
    }
    let xs = |b: &Band| -> Vec<f64> {
        match axis {
            PlotAxis::Epoch => b.epochs.iter().map(|&e| e as f64).collect(),
            PlotAxis::CpuSeconds => b.cpu_median.clone(),
        }
    };
    let floor = bands
        .iter()
        .flat_map(|b| b.min.iter().chain(&b.median).chain(&b.max))
        .cloned()
        .filter(|v| *v > 0.0 && v.is_finite())
        .fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor } else { 1.0 };
    let ty = |v: f64| if log_y { v.max(floor).log10() } else { v };

    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for b in bands {
        for x in xs(b) {
            x_lo = x_lo.min(x);
            x_hi = x_hi.max(x);
        }
        for &v in b.min.iter().chain(&b.max).chain(&b.median) {
            y_lo = y_lo.min(ty(v));
            y_hi = y_hi.max(ty(v));
        }
    }
    if log_y {
        y_lo = y_lo.floor();
        y_hi = y_hi.ceil();
    }
    let sx = Scale::new(x_lo, x_hi, LEFT, WIDTH - RIGHT);
    let sy = Scale::new(y_lo, y_hi, HEIGHT - BOTTOM, TOP);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (px0, px1, py0, py1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        s,
        r#"<rect x="{px0}" y="{py0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        px1 - px0,
        py1 - py0
    );

    // Ticks: decades on a log axis, five even steps otherwise.
    let y_ticks: Vec<f64> = if log_y {
        let (a, b) = (sy.lo as i64, sy.hi as i64);
        let step = ((b - a) / 8).max(1);
        (a..=b).step_by(step as usize).map(|k| k as f64).collect()
    } else {
        (0..=5).map(|k| sy.lo + (sy.hi - sy.lo) * k as f64 / 5.0).collect()
    };
    for t in y_ticks {
        let y = sy.map(t);
        let label = if log_y { format!("1e{}", t as i64) } else { format!("{t:.3}") };
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{px0}" y2="{y:.2}" stroke="black"/>"#, px0 - 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" font-size="11" text-anchor="end">{label}</text>"#,
            px0 - 8.0,
            y + 4.0
        );
    }
    for k in 0..=5 {
        let t = sx.lo + (sx.hi - sx.lo) * k as f64 / 5.0;
        let x = sx.map(t);
        let label = match axis {
            PlotAxis::Epoch => format!("{t:.0}"),
            PlotAxis::CpuSeconds => format!("{t:.3}"),
        };
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{py1}" x2="{x:.2}" y2="{}" stroke="black"/>"#, py1 + 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}" font-size="11" text-anchor="middle">{label}</text>"#,
            py1 + 18.0
        );
    }
    let x_label = match axis {
        PlotAxis::Epoch => "epoch",
        PlotAxis::CpuSeconds => "CPU seconds",
    };
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">{x_label}</text>"#,
        (px0 + px1) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {})">l2 error</text>"#,
        (py0 + py1) / 2.0,
        (py0 + py1) / 2.0
    );

    for (i, b) in bands.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let dash = DASHES[i % DASHES.len()];
        let x = xs(b);
        let pt = |k: usize, v: f64| format!("{:.2},{:.2}", sx.map(x[k]), sy.map(ty(v)));
        let mut poly: Vec<String> = (0..x.len()).map(|k| pt(k, b.max[k])).collect();
        poly.extend((0..x.len()).rev().map(|k| pt(k, b.min[k])));
        let _ = writeln!(
            s,
            r#"<polygon class="band" data-method="{}" points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            b.method,
            poly.join(" ")
        );
        let line: Vec<String> = (0..x.len()).map(|k| pt(k, b.median[k])).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="median" data-method="{}" points="{}" fill="none" stroke="{color}" stroke-width="2" stroke-dasharray="{dash}"/>"#,
            b.method,
            line.join(" ")
        );
        let ly = TOP + 18.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2" stroke-dasharray="{dash}"/>"#,
            px1 - 150.0,
            px1 - 120.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12">{}</text>"#,
            px1 - 115.0,
            ly + 4.0,
            b.method
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_svg_plot(bands: &[Band], path: &Path, axis: PlotAxis, log_y: bool) -> Result<()> {
    write_text(path, &render_svg(bands, axis, log_y)?)
}
