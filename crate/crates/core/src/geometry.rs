//! Line parameterization, kernels and the exact score function.
//!
//! Lines are stored in Hesse normal form `r = x cos(theta) + y sin(theta)`.
//! The parameter strip is `R x [0, pi]` with `(r, 0)` and `(-r, pi)`
//! describing the same line.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// A line `r = x cos(theta) + y sin(theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineParams {
    pub r: f64,
    pub theta: f64,
}

impl LineParams {
    pub fn new(r: f64, theta: f64) -> Self {
        Self { r, theta }
    }

    /// Unit normal `(cos theta, sin theta)`.
    pub fn normal(&self) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        (c, s)
    }
}

/// Maps any `(r, theta)` to the equivalent line with `theta` in `[0, pi)`.
///
/// Every half-turn added to `theta` flips the sign of `r`.
pub fn canonicalize(lp: LineParams) -> Result<LineParams> {
    if !lp.r.is_finite() || !lp.theta.is_finite() {
        return invalid(format!("non-finite line parameters ({}, {})", lp.r, lp.theta));
    }
    if (0.0..PI).contains(&lp.theta) {
        return Ok(lp);
    }
    let turns = (lp.theta / PI).floor();
    let mut theta = lp.theta - turns * PI;
    let mut r = if (turns as i64).rem_euclid(2) == 1 { -lp.r } else { lp.r };
    // rounding can land exactly on either end of the half-open range
    if theta >= PI {
        theta -= PI;
        r = -r;
    }
    if theta < 0.0 {
        theta += PI;
        r = -r;
        if theta >= PI {
            theta = 0.0;
        }
    }
    Ok(LineParams { r, theta })
}

/// Orthogonal distance `|r - x cos(theta) - y sin(theta)|`.
pub fn point_line_distance(p: Point, lp: LineParams) -> f64 {
    (lp.r - sinusoid(p, lp.theta)).abs()
}

/// The `r` coordinate of the dual curve of `p` at angle `theta`.
pub fn sinusoid(p: Point, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    p.x * c + p.y * s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Hat,
    Rbf,
}

impl std::str::FromStr for KernelKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hat" => Ok(KernelKind::Hat),
            "rbf" | "gauss" | "gaussian" => Ok(KernelKind::Rbf),
            other => invalid(format!("unknown kernel '{other}'")),
        }
    }
}

/// Kernel family and width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub sigma: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return invalid(format!("kernel width must be positive, got {sigma}"));
        }
        Ok(Self { kind, sigma })
    }

    pub fn hat(sigma: f64) -> Result<Self> {
        Self::new(KernelKind::Hat, sigma)
    }

    pub fn rbf(sigma: f64) -> Result<Self> {
        Self::new(KernelKind::Rbf, sigma)
    }

    /// Kernel value at distance `x >= 0`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return invalid(format!("kernel argument must be non-negative, got {x}"));
        }
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        match self.kind {
            KernelKind::Hat => (1.0 - x / self.sigma).max(0.0),
            KernelKind::Rbf => (-(x * x) / (2.0 * self.sigma * self.sigma)).exp(),
        }
    }

    /// Global Lipschitz constant of the kernel: `1/sigma` for hat,
    /// `1/(sigma sqrt(e))` for RBF (steepest slope at `x = sigma`).
    pub fn lipschitz(&self) -> f64 {
        match self.kind {
            KernelKind::Hat => 1.0 / self.sigma,
            KernelKind::Rbf => 1.0 / (self.sigma * std::f64::consts::E.sqrt()),
        }
    }

    /// Smallest distance beyond which the kernel stays `<= level`, for
    /// `0 < level < 1`.
    pub fn inverse(&self, level: f64) -> f64 {
        match self.kind {
            KernelKind::Hat => self.sigma * (1.0 - level),
            KernelKind::Rbf => self.sigma * (2.0 * (1.0 / level).ln()).sqrt(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { kind: self.kind, sigma: self.sigma * factor }
    }
}

/// Free function form of [`KernelSpec::eval`].
pub fn kernel_eval(k: KernelSpec, x: f64) -> Result<f64> {
    k.eval(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizationMode {
    /// Divide the kernel sum by the number of points; scores lie in `[0, 1]`.
    #[default]
    Mean,
    /// Plain kernel sum; scores lie in `[0, |P|]`.
    Sum,
}

impl std::str::FromStr for NormalizationMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(NormalizationMode::Mean),
            "sum" => Ok(NormalizationMode::Sum),
            other => invalid(format!("unknown normalization mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub kernel: KernelSpec,
    #[serde(default)]
    pub mode: NormalizationMode,
}

impl ScoreConfig {
    pub fn new(kernel: KernelSpec, mode: NormalizationMode) -> Self {
        Self { kernel, mode }
    }

    pub fn mean(kernel: KernelSpec) -> Self {
        Self::new(kernel, NormalizationMode::Mean)
    }

    /// Factor applied to the raw kernel sum.
    pub(crate) fn weight(&self, n: usize) -> f64 {
        match self.mode {
            NormalizationMode::Mean => 1.0 / n as f64,
            NormalizationMode::Sum => 1.0,
        }
    }

    /// Upper bound of the score over all lines.
    pub fn max_score(&self, n: usize) -> f64 {
        match self.mode {
            NormalizationMode::Mean => 1.0,
            NormalizationMode::Sum => n as f64,
        }
    }
}

/// Affine map `p -> (p - center) / scale` applied to the raw input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub scale: f64,
    pub center: Point,
}

impl Normalization {
    pub const IDENTITY: Normalization = Normalization { scale: 1.0, center: Point { x: 0.0, y: 0.0 } };

    pub fn apply(&self, p: Point) -> Point {
        Point::new((p.x - self.center.x) / self.scale, (p.y - self.center.y) / self.scale)
    }

    pub fn invert(&self, p: Point) -> Point {
        Point::new(p.x * self.scale + self.center.x, p.y * self.scale + self.center.y)
    }

    /// Raw-coordinate line to normalized-coordinate line (not canonicalized).
    pub fn line_to_normalized(&self, lp: LineParams) -> LineParams {
        let offset = sinusoid(self.center, lp.theta);
        LineParams::new((lp.r - offset) / self.scale, lp.theta)
    }

    /// Normalized-coordinate line back to raw coordinates (not canonicalized).
    pub fn line_to_raw(&self, lp: LineParams) -> LineParams {
        let offset = sinusoid(self.center, lp.theta);
        LineParams::new(lp.r * self.scale + offset, lp.theta)
    }

    /// Kernel with its width expressed in normalized units.
    pub fn kernel_to_normalized(&self, k: KernelSpec) -> KernelSpec {
        k.scaled(1.0 / self.scale)
    }
}

/// A non-empty point set mapped into the closed unit disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    points: Vec<Point>,
    normalization: Normalization,
}

impl PointCloud {
    /// Normalizes raw points: centers the bounding box midpoint at the
    /// origin and divides by the largest distance to it.
    pub fn new(raw: &[Point]) -> Result<Self> {
        check_points(raw)?;
        let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in raw {
            xmin = xmin.min(p.x);
            xmax = xmax.max(p.x);
            ymin = ymin.min(p.y);
            ymax = ymax.max(p.y);
        }
        let center = Point::new(0.5 * (xmin + xmax), 0.5 * (ymin + ymax));
        let radius = raw
            .iter()
            .map(|p| (p.x - center.x).hypot(p.y - center.y))
            .fold(0.0, f64::max);
        // all points coincide: any positive scale keeps them in the disk
        let scale = if radius > 0.0 { radius * (1.0 + 1e-12) } else { 1.0 };
        let normalization = Normalization { scale, center };
        let points = raw.iter().map(|&p| normalization.apply(p)).collect();
        Ok(Self { points, normalization })
    }

    /// Wraps points that are already inside the unit disk.
    pub fn from_normalized(points: Vec<Point>) -> Result<Self> {
        check_points(&points)?;
        if let Some(p) = points.iter().find(|p| p.norm() > 1.0) {
            return invalid(format!("point ({}, {}) lies outside the unit disk", p.x, p.y));
        }
        Ok(Self { points, normalization: Normalization::IDENTITY })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn raw_points(&self) -> Vec<Point> {
        self.points.iter().map(|&p| self.normalization.invert(p)).collect()
    }

    /// Same normalization, displaced points. Used for stability checks.
    pub fn with_points(&self, points: Vec<Point>) -> Result<Self> {
        check_points(&points)?;
        Ok(Self { points, normalization: self.normalization })
    }
}

fn check_points(points: &[Point]) -> Result<()> {
    if points.is_empty() {
        return invalid("point cloud is empty");
    }
    if let Some(p) = points.iter().find(|p| !p.is_finite()) {
        return invalid(format!("non-finite point ({}, {})", p.x, p.y));
    }
    Ok(())
}

/// Kernel-weighted vote of all points for the line `lp` (normalized coordinates).
pub fn score(cloud: &PointCloud, lp: LineParams, cfg: &ScoreConfig) -> Result<f64> {
    if cloud.is_empty() {
        return invalid("score of an empty point cloud");
    }
    Ok(score_unchecked(cloud.points(), lp, cfg))
}

#[inline]
pub(crate) fn score_unchecked(points: &[Point], lp: LineParams, cfg: &ScoreConfig) -> f64 {
    let (s, c) = lp.theta.sin_cos();
    let sum: f64 = points
        .iter()
        .map(|p| cfg.kernel.eval_unchecked((lp.r - p.x * c - p.y * s).abs()))
        .sum();
    sum * cfg.weight(points.len())
}
