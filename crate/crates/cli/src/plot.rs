use std::fmt::Write as _;

use offsetph_core::{Barcode, Interval};

const WIDTH: f64 = 640.0;
const LEFT: f64 = 40.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 20.0;
const ROW: f64 = 10.0;
const AXIS_SPACE: f64 = 40.0;

/// Tick spacing of 1, 2 or 5 times a power of ten, about five ticks per axis.
fn tick_step(limit: f64) -> f64 {
    let raw = limit / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

/// Horizontal bar plot: dimension 0 in red above dimension 1 in blue,
/// offset radius on the x-axis, essential bars run into an arrowhead at the
/// right end of the axis.
pub fn barcode_svg(barcode: &Barcode) -> String {
    let finite = barcode
        .dim0
        .iter()
        .chain(&barcode.dim1)
        .flat_map(|i| [i.birth, i.death])
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    let step = tick_step(if finite > 0.0 { finite * 1.1 } else { 1.0 });
    let limit = (if finite > 0.0 { finite * 1.1 } else { 1.0 } / step).ceil() * step;
    let span = WIDTH - LEFT - RIGHT;
    let x = |v: f64| LEFT + span * v.min(limit) / limit;
    let rows = barcode.dim0.len() + barcode.dim1.len();
    let axis_y = TOP + ROW * rows as f64 + 10.0;
    let height = axis_y + AXIS_SPACE;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    out.push_str("<defs>\n");
    for color in ["red", "blue"] {
        let _ = writeln!(
            out,
            r#"<marker id="arrow-{color}" markerWidth="8" markerHeight="8" refX="6" refY="4" orient="auto"><path d="M0,0 L8,4 L0,8 z" fill="{color}"/></marker>"#
        );
    }
    out.push_str("</defs>\n");
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{height}" fill="white"/>"#);

    let mut row = 0;
    for (bars, color) in [(&barcode.dim0, "red"), (&barcode.dim1, "blue")] {
        for bar in bars.iter() {
            let y = TOP + ROW * (row as f64 + 0.5);
            let _ = writeln!(out, "{}", bar_line(bar, x(bar.birth), x(bar.death), y, color));
            row += 1;
        }
    }

    let _ = writeln!(
        out,
        r#"<line x1="{LEFT}" y1="{axis_y}" x2="{}" y2="{axis_y}" stroke="black"/>"#,
        LEFT + span
    );
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let ticks = (limit / step).round() as usize;
    for k in 0..=ticks {
        let v = k as f64 * step;
        let tx = x(v);
        let _ = writeln!(
            out,
            r#"<line x1="{tx}" y1="{axis_y}" x2="{tx}" y2="{}" stroke="black"/><text x="{tx}" y="{}" font-size="10" text-anchor="middle">{v:.decimals$}</text>"#,
            axis_y + 4.0,
            axis_y + 16.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">offset radius</text>"#,
        LEFT + span / 2.0,
        axis_y + 32.0
    );
    out.push_str("</svg>\n");
    out
}

fn bar_line(bar: &Interval, x0: f64, x1: f64, y: f64, color: &str) -> String {
    let marker = if bar.is_essential() { format!(r#" marker-end="url(#arrow-{color})""#) } else { String::new() };
    format!(r#"<line x1="{x0:.3}" y1="{y}" x2="{x1:.3}" y2="{y}" stroke="{color}" stroke-width="4"{marker}/>"#)
}
