//! Synthetic point clouds sampled from ground-truth lines.
//!
//! Randomness comes from ChaCha8 streams: a scene with seed `s` and index
//! `i` uses `ChaCha8Rng::seed_from_u64(s)` on stream `i`, so scenes are
//! reproducible on every platform and independent of each other.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{canonicalize, sinusoid, LineParams, Point, PointCloud};

const MAX_ATTEMPTS: usize = 1000;

/// Ground-truth line with its sampling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSpec {
    #[serde(flatten)]
    pub params: LineParams,
    #[serde(rename = "n")]
    pub n_points: usize,
    #[serde(rename = "noise")]
    pub noise_halfwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    /// Side length of the square `[0, extent]^2`.
    pub extent: f64,
    pub seed: u64,
    pub truth: Vec<LineSpec>,
    #[serde(with = "point_pairs")]
    pub points: Vec<Point>,
}

impl Scene {
    pub fn cloud(&self) -> Result<PointCloud> {
        PointCloud::new(&self.points)
    }

    pub fn truth_lines(&self) -> Vec<LineParams> {
        self.truth.iter().map(|t| t.params).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub(crate) mod point_pairs {
    use super::Point;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(points: &[Point], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = points.iter().map(|p| [p.x, p.y]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Point>, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(pairs.into_iter().map(|[x, y]| Point::new(x, y)).collect())
    }
}

/// Deterministic generator for scene `index` of a run seeded with `seed`.
pub fn scene_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Parameter interval `[t0, t1]` of the line inside `[0, extent]^2`, with
/// points written as `r n + t d` for normal `n` and direction `d = (-n_y, n_x)`.
pub fn chord(lp: LineParams, extent: f64) -> Option<(f64, f64)> {
    let (nx, ny) = lp.normal();
    let (ox, oy) = (lp.r * nx, lp.r * ny);
    let (dx, dy) = (-ny, nx);
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for (o, d) in [(ox, dx), (oy, dy)] {
        if d.abs() < 1e-15 {
            if o < 0.0 || o > extent {
                return None;
            }
        } else {
            let (a, b) = ((0.0 - o) / d, (extent - o) / d);
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
    }
    (t1 > t0).then_some((t0, t1))
}

/// Samples `n_points` positions uniformly along the chord of the line
/// through the extent, each displaced along the normal by
/// `u ~ U[-noise, noise)`.
pub fn sample_line<R: Rng>(spec: &LineSpec, extent: f64, rng: &mut R) -> Result<Vec<Point>> {
    if spec.n_points == 0 {
        return invalid("a line needs at least one point");
    }
    if !(spec.noise_halfwidth >= 0.0) {
        return invalid(format!("noise half-width must be non-negative, got {}", spec.noise_halfwidth));
    }
    let (t0, t1) = chord(spec.params, extent)
        .ok_or_else(|| Error::InvalidArgument(format!("line {:?} misses the [0, {extent}]^2 extent", spec.params)))?;
    let (nx, ny) = spec.params.normal();
    let h = spec.noise_halfwidth;
    Ok((0..spec.n_points)
        .map(|_| {
            let t = rng.random_range(t0..t1);
            let u = if h > 0.0 { rng.random_range(-h..h) } else { 0.0 };
            let along = spec.params.r + u;
            Point::new(along * nx - t * ny, along * ny + t * nx)
        })
        .collect())
}

/// Samples every spec in order and concatenates the points.
pub fn gen_scene(specs: &[LineSpec], extent: f64, seed: u64) -> Result<Scene> {
    gen_scene_with(specs, extent, seed, &mut scene_rng(seed, 0))
}

fn gen_scene_with<R: Rng>(specs: &[LineSpec], extent: f64, seed: u64, rng: &mut R) -> Result<Scene> {
    if specs.is_empty() {
        return invalid("a scene needs at least one line");
    }
    if !(extent > 0.0 && extent.is_finite()) {
        return invalid(format!("extent must be positive, got {extent}"));
    }
    let mut points = Vec::with_capacity(specs.iter().map(|s| s.n_points).sum());
    for spec in specs {
        points.extend(sample_line(spec, extent, rng)?);
    }
    Ok(Scene { extent, seed, truth: specs.to_vec(), points })
}

/// Random line whose chord through the extent is at least `n_points / 2`
/// long: `theta ~ U[0, pi)`, `r` uniform over the offsets that hit the square.
pub fn random_line<R: Rng>(n_points: usize, extent: f64, rng: &mut R) -> Result<LineParams> {
    let min_chord = n_points as f64 / 2.0;
    for _ in 0..MAX_ATTEMPTS {
        let theta = rng.random_range(0.0..PI);
        let corners = [(0.0, 0.0), (extent, 0.0), (0.0, extent), (extent, extent)];
        let rs = corners.map(|(x, y)| sinusoid(Point::new(x, y), theta));
        let lo = rs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = rs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lp = LineParams::new(rng.random_range(lo..hi), theta);
        if let Some((t0, t1)) = chord(lp, extent) {
            if t1 - t0 >= min_chord {
                return canonicalize(lp);
            }
        }
    }
    Err(Error::GenerationFailure(format!(
        "no line with a chord of length {min_chord} after {MAX_ATTEMPTS} attempts in extent {extent}"
    )))
}

/// Scene of randomly placed lines with the given point counts, drawn from
/// stream `index` of `seed`.
pub fn random_scene(counts: &[usize], noise: f64, extent: f64, seed: u64, index: u64) -> Result<Scene> {
    if counts.is_empty() {
        return invalid("a scene needs at least one line");
    }
    let mut rng = scene_rng(seed, index);
    let specs = counts
        .iter()
        .map(|&n| Ok(LineSpec { params: random_line(n, extent, &mut rng)?, n_points: n, noise_halfwidth: noise }))
        .collect::<Result<Vec<_>>>()?;
    gen_scene_with(&specs, extent, seed, &mut rng)
}
