//! Minimal self-contained SVG figures: a scene with its detected lines and
//! a persistence diagram.

use std::fmt::Write as _;

use crate::geometry::{LineParams, Point};
use crate::io::fmt_f64;
use crate::persistence::PersistencePair;

const SIZE: f64 = 480.0;
const PAD: f64 = 24.0;
const LINE_COLORS: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn header(out: &mut String) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">",
        s = SIZE
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
}

/// Maps data coordinates in `[lo, hi]^2` to the canvas, y pointing up.
struct Frame {
    lo: f64,
    hi: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        PAD + (v - self.lo) / (self.hi - self.lo) * (SIZE - 2.0 * PAD)
    }

    fn y(&self, v: f64) -> f64 {
        SIZE - self.x(v)
    }
}

/// Clips a line to the square `[lo, hi]^2`.
fn clip(lp: LineParams, lo: f64, hi: f64) -> Option<(Point, Point)> {
    let (nx, ny) = lp.normal();
    let (ox, oy, dx, dy) = (lp.r * nx, lp.r * ny, -ny, nx);
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for (o, d) in [(ox, dx), (oy, dy)] {
        if d.abs() < 1e-15 {
            if o < lo || o > hi {
                return None;
            }
        } else {
            let (a, b) = ((lo - o) / d, (hi - o) / d);
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
    }
    (t1 > t0).then(|| (Point::new(ox + t0 * dx, oy + t0 * dy), Point::new(ox + t1 * dx, oy + t1 * dy)))
}

/// Points as dots, lines clipped to the bounding square of the points.
pub fn scene_svg(points: &[Point], lines: &[LineParams]) -> String {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo = lo.min(p.x.min(p.y));
        hi = hi.max(p.x.max(p.y));
    }
    if !(hi > lo) {
        lo = if lo.is_finite() { lo - 1.0 } else { -1.0 };
        hi = lo + 2.0;
    }
    let margin = 0.05 * (hi - lo);
    let f = Frame { lo: lo - margin, hi: hi + margin };
    let mut out = String::new();
    header(&mut out);
    for (i, &lp) in lines.iter().enumerate() {
        if let Some((a, b)) = clip(lp, f.lo, f.hi) {
            let _ = writeln!(
                out,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"1.5\"/>",
                fmt_f64(f.x(a.x)),
                fmt_f64(f.y(a.y)),
                fmt_f64(f.x(b.x)),
                fmt_f64(f.y(b.y)),
                LINE_COLORS[i % LINE_COLORS.len()]
            );
        }
    }
    for p in points {
        let _ = writeln!(out, "<circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"black\"/>", fmt_f64(f.x(p.x)), fmt_f64(f.y(p.y)));
    }
    out.push_str("</svg>\n");
    out
}

/// Birth against death with the diagonal; the first `highlight` pairs are
/// drawn in color.
pub fn diagram_svg(pairs: &[PersistencePair], highlight: usize) -> String {
    let top = pairs.iter().map(|p| p.birth).fold(0.0f64, f64::max).max(1e-12) * 1.05;
    let f = Frame { lo: 0.0, hi: top };
    let mut out = String::new();
    header(&mut out);
    let _ = writeln!(
        out,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>",
        fmt_f64(f.x(0.0)),
        fmt_f64(f.y(0.0)),
        fmt_f64(f.x(top)),
        fmt_f64(f.y(top))
    );
    for (i, p) in pairs.iter().enumerate() {
        let color = if i < highlight { LINE_COLORS[i % LINE_COLORS.len()] } else { "black" };
        // death on the horizontal axis, birth on the vertical
        let _ = writeln!(
            out,
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\"/>",
            fmt_f64(f.x(p.death)),
            fmt_f64(f.y(p.birth))
        );
    }
    out.push_str("</svg>\n");
    out
}
