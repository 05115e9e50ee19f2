//! Point, line and diagram file formats.
//!
//! Points are read from CSV (`x,y` per line, `#` comments, blank lines
//! skipped) or from a JSON array of `[x, y]` pairs. Every float written by
//! this crate goes through [`fmt_f64`], nine significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::persistence::{representative_line, DetectedLine, PersistencePair};
use crate::subdivision::CellField;

/// Shortest rendering of `x` with at most nine significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let prec = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.prec$}"))
    } else {
        let s = format!("{x:.8e}");
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        format!("{}e{e}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" { "0".to_string() } else { t.to_string() }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parses CSV point text. A leading `x,y` header is tolerated.
pub fn parse_points_csv(text: &str) -> Result<Vec<Point>> {
    let mut points = Vec::new();
    let mut seen_data = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_data && line.replace(' ', "").eq_ignore_ascii_case("x,y") {
            seen_data = true;
            continue;
        }
        seen_data = true;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(parse_err(i + 1, format!("expected 2 fields, found {}: '{line}'", fields.len())));
        }
        let mut xy = [0.0; 2];
        for (slot, f) in xy.iter_mut().zip(&fields) {
            *slot = f.parse::<f64>().map_err(|_| parse_err(i + 1, format!("not a number: '{f}'")))?;
            if !slot.is_finite() {
                return Err(parse_err(i + 1, format!("non-finite coordinate '{f}'")));
            }
        }
        points.push(Point::new(xy[0], xy[1]));
    }
    Ok(points)
}

/// Parses a JSON array of `[x, y]` pairs.
pub fn parse_points_json(text: &str) -> Result<Vec<Point>> {
    let pairs: Vec<[f64; 2]> = serde_json::from_str(text).map_err(|e| parse_err(e.line(), e.to_string()))?;
    Ok(pairs.into_iter().map(|[x, y]| Point::new(x, y)).collect())
}

/// JSON when the text starts with `[`, CSV otherwise.
pub fn parse_points(text: &str) -> Result<Vec<Point>> {
    if text.trim_start().starts_with('[') { parse_points_json(text) } else { parse_points_csv(text) }
}

/// Reads a point file, rejecting empty clouds.
pub fn read_points(path: &Path) -> Result<Vec<Point>> {
    let text = fs::read_to_string(path)?;
    let points = parse_points(&text)?;
    if points.is_empty() {
        return Err(Error::InvalidArgument(format!("{} contains no points", path.display())));
    }
    Ok(points)
}

pub fn points_to_csv(points: &[Point]) -> String {
    let mut out = String::new();
    for p in points {
        let _ = writeln!(out, "{},{}", fmt_f64(p.x), fmt_f64(p.y));
    }
    out
}

pub const DIAGRAM_HEADER: &str = "birth,death,persistence,r,theta";

/// Persistence diagram with the representative line of every pair, in the
/// order given.
pub fn diagram_csv(pairs: &[PersistencePair], field: &CellField) -> Result<String> {
    let mut out = format!("{DIAGRAM_HEADER}\n");
    for p in pairs {
        let lp = representative_line(field, p.representative)?;
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(p.birth),
            fmt_f64(p.death),
            fmt_f64(p.persistence()),
            fmt_f64(lp.r),
            fmt_f64(lp.theta)
        );
    }
    Ok(out)
}

/// Detected lines as a JSON array, floats rounded like every other output.
pub fn lines_json(lines: &[DetectedLine]) -> String {
    let mut out = String::from("[\n");
    for (i, l) in lines.iter().enumerate() {
        let _ = write!(
            out,
            "  {{\"r\": {}, \"theta\": {}, \"score\": {}, \"death\": {}, \"persistence\": {}, \"cell\": {}}}",
            fmt_f64(l.r),
            fmt_f64(l.theta),
            fmt_f64(l.score),
            fmt_f64(l.death),
            fmt_f64(l.persistence),
            l.cell
        );
        out.push_str(if i + 1 < lines.len() { ",\n" } else { "\n" });
    }
    out.push(']');
    out.push('\n');
    out
}

pub fn parse_lines_json(text: &str) -> Result<Vec<DetectedLine>> {
    Ok(serde_json::from_str(text)?)
}

/// Writes every `(path, contents)` pair, or none of them: contents go to
/// temporary siblings first and are renamed into place once all writes
/// succeeded.
pub fn write_all(outputs: &[(&Path, &str)]) -> Result<()> {
    let mut staged = Vec::with_capacity(outputs.len());
    let result = (|| {
        for (path, contents) in outputs {
            let mut tmp = path.as_os_str().to_owned();
            tmp.push(".partial");
            let tmp = std::path::PathBuf::from(tmp);
            fs::write(&tmp, contents)?;
            staged.push((tmp, *path));
        }
        for (tmp, path) in &staged {
            fs::rename(tmp, path)?;
        }
        Ok(())
    })();
    if result.is_err() {
        for (tmp, _) in &staged {
            let _ = fs::remove_file(tmp);
        }
    }
    result
}
