//! Piecewise-constant approximation of the score on an adaptive quad-tree.
//!
//! The strip `[-r0, r0] x [0, pi]` is split into four congruent children
//! until every box `B` satisfies `lambda(B) * diam(B) / 2 <= epsilon`, where
//! `lambda(B)` is a Lipschitz constant of the score on `B`. Each leaf then
//! carries the score at its midpoint, which is within `epsilon` of the score
//! anywhere in the box. Outside the strip the score is at most `epsilon` and
//! the approximation is taken to be zero.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{score_unchecked, LineParams, Normalization, PointCloud, ScoreConfig};
use crate::lipschitz::{global_lipschitz, local_lipschitz_points, ParamBox};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LipschitzPredicate {
    /// Box-local constant from the vertical distances of the dual curves.
    #[default]
    Local,
    /// One constant for the whole strip; yields a uniform grid.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxConfig {
    /// Sup-norm error budget in score units.
    pub epsilon: f64,
    pub max_depth: u32,
    pub min_cell_diameter: f64,
    pub predicate: LipschitzPredicate,
}

impl ApproxConfig {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon, ..Self::default() }
    }

    pub fn with_predicate(mut self, predicate: LipschitzPredicate) -> Self {
        self.predicate = predicate;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return invalid(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.max_depth < 1 || self.max_depth > 60 {
            return invalid(format!("max_depth must be in 1..=60, got {}", self.max_depth));
        }
        if !(self.min_cell_diameter > 0.0) {
            return invalid("min_cell_diameter must be positive");
        }
        Ok(())
    }
}

impl Default for ApproxConfig {
    fn default() -> Self {
        Self { epsilon: 0.01, max_depth: 30, min_cell_diameter: 1e-9, predicate: LipschitzPredicate::Local }
    }
}

/// A leaf of the quad-tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    #[serde(flatten)]
    pub bounds: ParamBox,
    /// Score at the midpoint of `bounds`.
    pub value: f64,
    pub id: usize,
    /// Set when the depth or size guard stopped refinement before the
    /// error predicate held.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub capped: bool,
}

/// The leaves of the quad-tree together with the domain they tile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellField {
    pub domain: ParamBox,
    pub r0: f64,
    pub epsilon: f64,
    #[serde(default = "identity")]
    pub normalization: Normalization,
    /// Indexed by `id`.
    pub cells: Vec<Cell>,
}

fn identity() -> Normalization {
    Normalization::IDENTITY
}

impl CellField {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn capped_count(&self) -> usize {
        self.cells.iter().filter(|c| c.capped).count()
    }

    /// Leaf containing `q`; linear scan, smallest id on shared boundaries.
    pub fn locate(&self, q: LineParams) -> Result<&Cell> {
        self.cells
            .iter()
            .find(|c| c.bounds.contains(q))
            .ok_or_else(|| Error::NotFound(format!("({}, {}) is outside the approximation domain", q.r, q.theta)))
    }

    /// Approximate score at `q`: the containing cell's value, or zero
    /// outside the domain.
    pub fn value_at(&self, q: LineParams) -> f64 {
        self.locate(q).map(|c| c.value).unwrap_or(0.0)
    }

    pub fn locator(&self) -> CellLocator<'_> {
        CellLocator::new(self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let field: CellField = serde_json::from_str(s)?;
        if field.cells.iter().enumerate().any(|(i, c)| c.id != i) {
            return invalid("cell ids must be dense and ordered");
        }
        Ok(field)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Bucket grid over the domain for fast point location.
pub struct CellLocator<'a> {
    field: &'a CellField,
    buckets: Vec<Vec<u32>>,
    nr: usize,
    nt: usize,
}

impl<'a> CellLocator<'a> {
    pub fn new(field: &'a CellField) -> Self {
        let side = ((field.len() as f64).sqrt().ceil() as usize).clamp(1, 1024);
        let (nr, nt) = (side, side);
        let mut buckets = vec![Vec::new(); nr * nt];
        let loc = CellLocator { field, buckets: Vec::new(), nr, nt };
        for c in &field.cells {
            let (i0, i1) = (loc.r_bucket(c.bounds.r_lo), loc.r_bucket(c.bounds.r_hi));
            let (j0, j1) = (loc.t_bucket(c.bounds.theta_lo), loc.t_bucket(c.bounds.theta_hi));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nr + i].push(c.id as u32);
                }
            }
        }
        CellLocator { buckets, ..loc }
    }

    fn r_bucket(&self, r: f64) -> usize {
        let d = &self.field.domain;
        (((r - d.r_lo) / d.width() * self.nr as f64).floor().max(0.0) as usize).min(self.nr - 1)
    }

    fn t_bucket(&self, t: f64) -> usize {
        let d = &self.field.domain;
        (((t - d.theta_lo) / d.height() * self.nt as f64).floor().max(0.0) as usize).min(self.nt - 1)
    }

    /// Same contract as [`CellField::locate`].
    pub fn locate(&self, q: LineParams) -> Result<&'a Cell> {
        let not_found = || Error::NotFound(format!("({}, {}) is outside the approximation domain", q.r, q.theta));
        if !self.field.domain.contains(q) {
            return Err(not_found());
        }
        let b = &self.buckets[self.t_bucket(q.theta) * self.nr + self.r_bucket(q.r)];
        b.iter()
            .map(|&id| &self.field.cells[id as usize])
            .find(|c| c.bounds.contains(q))
            .ok_or_else(not_found)
    }

    pub fn value_at(&self, q: LineParams) -> f64 {
        self.locate(q).map(|c| c.value).unwrap_or(0.0)
    }
}

/// Radius `r0` such that the score is at most `epsilon` whenever `|r| >= r0`.
///
/// For `|r| >= 1 + d` every point of the unit disk is at distance at least
/// `d` from the line, so `d` is chosen where the kernel drops to the
/// per-point share of the budget.
pub fn initial_r0(cloud: &PointCloud, cfg: &ScoreConfig, epsilon: f64) -> Result<f64> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return invalid(format!("epsilon must be positive, got {epsilon}"));
    }
    let level = epsilon / cfg.max_score(cloud.len());
    if level >= 1.0 {
        return invalid(format!(
            "epsilon {epsilon} reaches the score maximum {}; no truncation radius is needed",
            cfg.max_score(cloud.len())
        ));
    }
    Ok(1.0 + cfg.kernel.inverse(level))
}

enum Outcome {
    Leaf { value: f64, capped: bool },
    Split,
}

/// Builds the certified approximation of the score of `cloud`.
///
/// Cells are processed breadth-first and receive ids in the order they
/// become leaves, so the result is deterministic regardless of how the
/// per-level work is scheduled.
pub fn build_approximation(cloud: &PointCloud, score_cfg: &ScoreConfig, cfg: &ApproxConfig) -> Result<CellField> {
    cfg.validate()?;
    if cloud.is_empty() {
        return invalid("cannot approximate the score of an empty cloud");
    }
    let points = cloud.points();
    let n = points.len();
    let trivial = cfg.epsilon >= score_cfg.max_score(n);
    // the whole score range fits in the budget: any value works everywhere
    let r0 = if trivial { 1.0 } else { initial_r0(cloud, score_cfg, cfg.epsilon)? };
    let domain = ParamBox::strip(r0)?;
    let global = global_lipschitz(score_cfg.kernel, 1.0) * score_cfg.weight(n) * n as f64;

    let decide = |b: &ParamBox, depth: u32| -> Outcome {
        let value = score_unchecked(points, b.midpoint(), score_cfg);
        if trivial {
            return Outcome::Leaf { value, capped: false };
        }
        let lambda = match cfg.predicate {
            LipschitzPredicate::Local => local_lipschitz_points(b, points, score_cfg),
            LipschitzPredicate::Global => global,
        };
        if lambda * b.diameter() / 2.0 <= cfg.epsilon {
            Outcome::Leaf { value, capped: false }
        } else if depth >= cfg.max_depth || b.diameter() / 2.0 < cfg.min_cell_diameter {
            Outcome::Leaf { value, capped: true }
        } else {
            Outcome::Split
        }
    };

    let mut cells = Vec::new();
    let mut frontier = vec![domain];
    let mut depth = 0u32;
    while !frontier.is_empty() {
        let outcomes: Vec<Outcome> = if frontier.len() >= 64 {
            frontier.par_iter().map(|b| decide(b, depth)).collect()
        } else {
            frontier.iter().map(|b| decide(b, depth)).collect()
        };
        let mut next = Vec::new();
        for (b, outcome) in frontier.iter().zip(outcomes) {
            match outcome {
                Outcome::Leaf { value, capped } => {
                    let id = cells.len();
                    cells.push(Cell { bounds: *b, value, id, capped });
                }
                Outcome::Split => next.extend_from_slice(&b.split()),
            }
        }
        frontier = next;
        depth += 1;
    }

    Ok(CellField { domain, r0, epsilon: cfg.epsilon, normalization: cloud.normalization(), cells })
}
