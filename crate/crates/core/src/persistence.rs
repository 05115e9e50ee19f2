//! 0-dimensional persistence of the super-levelset filtration of the
//! approximated score over the Möbius strip of lines.
//!
//! The closed quad-tree cells cover the strip, so the super-levelset at
//! level `h` has the connected components of the nerve graph restricted to
//! cells with value `>= h`. Cells touching `theta = 0` are glued to cells
//! touching `theta = pi` with negated `r`. One extra background vertex of
//! value zero stands in for everything beyond `|r| > r0`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{canonicalize, LineParams};
use crate::lipschitz::ParamBox;
use crate::subdivision::CellField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NerveOptions {
    /// Glue `theta = 0` to `theta = pi`. Disabling it is only meant for
    /// debugging the planar strip.
    pub twisted: bool,
}

impl Default for NerveOptions {
    fn default() -> Self {
        Self { twisted: true }
    }
}

/// Vertex-weighted graph. Vertices `0..n` are cells (same ids), vertex `n`
/// is the background.
#[derive(Debug, Clone, PartialEq)]
pub struct NerveGraph {
    pub values: Vec<f64>,
    /// Sorted, deduplicated `(u, v)` with `u < v`.
    pub edges: Vec<(usize, usize)>,
}

impl NerveGraph {
    /// Builds a graph directly from values and edges; used by tests and by
    /// callers with their own complexes.
    pub fn from_edges(values: Vec<f64>, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let n = values.len();
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("vertex values must be finite");
        }
        let mut edges: Vec<(usize, usize)> = edges
            .into_iter()
            .filter(|(u, v)| u != v)
            .map(|(u, v)| (u.min(v), u.max(v)))
            .collect();
        if let Some(&(_, v)) = edges.iter().find(|&&(_, v)| v >= n) {
            return invalid(format!("edge endpoint {v} out of range for {n} vertices"));
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self { values, edges })
    }

    pub fn vertex_count(&self) -> usize {
        self.values.len()
    }

    pub fn background(&self) -> usize {
        self.values.len() - 1
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.values.len()];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    /// Vertices reachable from `start` through vertices with value `>= level`.
    pub fn superlevel_component(&self, start: usize, level: f64) -> Vec<bool> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.values.len()];
        if self.values[start] < level {
            return seen;
        }
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for &w in &adj[u] {
                if !seen[w] && self.values[w] >= level {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }
}

fn closed_overlap(a_lo: f64, a_hi: f64, b_lo: f64, b_hi: f64) -> bool {
    a_lo <= b_hi && b_lo <= a_hi
}

fn boxes_touch(a: &ParamBox, b: &ParamBox) -> bool {
    closed_overlap(a.r_lo, a.r_hi, b.r_lo, b.r_hi) && closed_overlap(a.theta_lo, a.theta_hi, b.theta_lo, b.theta_hi)
}

/// Nerve of the closed leaf boxes, including the twisted gluing and the
/// background vertex.
pub fn build_nerve(field: &CellField) -> NerveGraph {
    build_nerve_with(field, NerveOptions::default())
}

pub fn build_nerve_with(field: &CellField, opts: NerveOptions) -> NerveGraph {
    let n = field.len();
    let domain = field.domain;
    let mut values: Vec<f64> = field.cells.iter().map(|c| c.value).collect();
    values.push(0.0);

    // planar adjacencies: candidate pairs share a bucket of a uniform grid
    let side = ((n as f64).sqrt().ceil() as usize).clamp(1, 512);
    let bucket = |x: f64, lo: f64, width: f64| -> usize {
        (((x - lo) / width * side as f64).floor().max(0.0) as usize).min(side - 1)
    };
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); side * side];
    for c in &field.cells {
        let b = &c.bounds;
        let (i0, i1) = (bucket(b.r_lo, domain.r_lo, domain.width()), bucket(b.r_hi, domain.r_lo, domain.width()));
        let (j0, j1) = (
            bucket(b.theta_lo, domain.theta_lo, domain.height()),
            bucket(b.theta_hi, domain.theta_lo, domain.height()),
        );
        for j in j0..=j1 {
            for i in i0..=i1 {
                buckets[j * side + i].push(c.id);
            }
        }
    }
    let mut edges = Vec::new();
    for list in &buckets {
        for (k, &u) in list.iter().enumerate() {
            for &v in &list[k + 1..] {
                if boxes_touch(&field.cells[u].bounds, &field.cells[v].bounds) {
                    edges.push((u.min(v), u.max(v)));
                }
            }
        }
    }

    if opts.twisted {
        let mut bottom: Vec<&ParamBox> = Vec::new();
        let mut top: Vec<(usize, &ParamBox)> = Vec::new();
        let mut bottom_ids = Vec::new();
        for c in &field.cells {
            if c.bounds.theta_lo == domain.theta_lo {
                bottom.push(&c.bounds);
                bottom_ids.push(c.id);
            }
            if c.bounds.theta_hi == domain.theta_hi {
                top.push((c.id, &c.bounds));
            }
        }
        top.sort_by(|a, b| a.1.r_lo.total_cmp(&b.1.r_lo));
        for (a, &id_a) in bottom.iter().zip(&bottom_ids) {
            let (lo, hi) = (-a.r_hi, -a.r_lo);
            // first top cell that can reach `lo`; the r-ranges of the top row
            // partition the domain, so the scan stops after passing `hi`
            let start = top.partition_point(|(_, b)| b.r_hi < lo);
            for &(id_b, b) in &top[start..] {
                if b.r_lo > hi {
                    break;
                }
                if closed_overlap(lo, hi, b.r_lo, b.r_hi) {
                    edges.push((id_a.min(id_b), id_a.max(id_b)));
                }
            }
        }
    }

    for c in &field.cells {
        if c.bounds.r_lo == domain.r_lo || c.bounds.r_hi == domain.r_hi {
            edges.push((c.id, n));
        }
    }

    edges.retain(|(u, v)| u != v);
    edges.sort_unstable();
    edges.dedup();
    NerveGraph { values, edges }
}

/// One local maximum of the filtration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistencePair {
    pub birth: f64,
    pub death: f64,
    /// Vertex (cell id) where the component was born.
    pub representative: usize,
}

impl PersistencePair {
    pub fn persistence(&self) -> f64 {
        self.birth - self.death
    }
}

/// Persistence descending, then birth descending, then representative id.
pub fn pair_order(a: &PersistencePair, b: &PersistencePair) -> Ordering {
    b.persistence()
        .total_cmp(&a.persistence())
        .then(b.birth.total_cmp(&a.birth))
        .then(a.representative.cmp(&b.representative))
}

/// Disjoint sets with path halving and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `a` and `b`; returns the new root.
    pub fn union(&mut self, a: usize, b: usize) -> usize {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return ra;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        ra
    }
}

/// Processing order of the sweep: value descending, smaller id first.
pub fn filtration_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Persistence pairs of the super-levelset filtration by union-find.
///
/// Each component is identified by its eldest vertex (earliest in
/// [`filtration_order`]). When components meet at a vertex, every
/// younger one dies at that vertex's value; deaths at the birth level
/// (plateaus, zero regions of compact kernels) carry no information and
/// are not reported. Survivors die at zero. The
/// result is sorted by [`pair_order`]; the first pair is the component of
/// the global maximum. Components that only meet at level zero also report
/// a death of zero.
pub fn compute_persistence(g: &NerveGraph) -> Vec<PersistencePair> {
    let n = g.vertex_count();
    let adj = g.adjacency();
    let order = filtration_order(&g.values);
    let mut rank = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        rank[v] = i;
    }

    let mut sets = DisjointSet::new(n);
    // eldest vertex of the set rooted at each root
    let mut elder: Vec<usize> = (0..n).collect();
    let mut active = vec![false; n];
    let mut pairs = Vec::new();
    let mut roots = Vec::new();

    for &v in &order {
        active[v] = true;
        roots.clear();
        for &w in &adj[v] {
            if active[w] {
                let r = sets.find(w);
                if !roots.contains(&r) {
                    roots.push(r);
                }
            }
        }
        if roots.is_empty() {
            continue;
        }
        let survivor = *roots.iter().min_by_key(|&&r| rank[elder[r]]).unwrap();
        let keep = elder[survivor];
        for &r in &roots {
            let e = elder[r];
            // a component dying at its own birth level is a diagonal point
            if r != survivor && g.values[e] > g.values[v] {
                pairs.push(PersistencePair { birth: g.values[e], death: g.values[v], representative: e });
            }
        }
        let mut root = sets.union(v, survivor);
        for &r in &roots {
            root = sets.union(root, r);
        }
        elder[root] = keep;
    }

    let mut seen_roots = Vec::new();
    for v in 0..n {
        let r = sets.find(v);
        if !seen_roots.contains(&r) {
            seen_roots.push(r);
            let e = elder[r];
            pairs.push(PersistencePair { birth: g.values[e], death: 0.0, representative: e });
        }
    }
    pairs.sort_by(pair_order);
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    TopK(usize),
    Threshold(f64),
}

impl SelectionPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SelectionPolicy::TopK(0) => invalid("top_k must be at least 1"),
            SelectionPolicy::Threshold(a) if !(a >= 0.0 && a.is_finite()) => {
                invalid(format!("threshold must be a non-negative number, got {a}"))
            }
            _ => Ok(()),
        }
    }
}

/// A selected line in the input's coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectedLine {
    pub r: f64,
    pub theta: f64,
    /// Approximate score at the maximum (the birth level).
    pub score: f64,
    pub death: f64,
    pub persistence: f64,
    pub cell: usize,
}

impl DetectedLine {
    pub fn params(&self) -> LineParams {
        LineParams::new(self.r, self.theta)
    }
}

/// Line through the midpoint of a cell, canonical and in raw coordinates.
pub fn representative_line(field: &CellField, cell: usize) -> Result<LineParams> {
    let mid = canonicalize(field.cells[cell].bounds.midpoint())?;
    canonicalize(field.normalization.line_to_raw(mid))
}

/// Applies the selection policy and maps representatives back to lines.
pub fn select_lines(pairs: &[PersistencePair], field: &CellField, policy: SelectionPolicy) -> Result<Vec<DetectedLine>> {
    policy.validate()?;
    let mut sorted: Vec<PersistencePair> = pairs.iter().copied().filter(|p| p.representative < field.len()).collect();
    sorted.sort_by(pair_order);
    let chosen: Vec<PersistencePair> = match policy {
        SelectionPolicy::TopK(k) => sorted.into_iter().take(k).collect(),
        SelectionPolicy::Threshold(alpha) => sorted.into_iter().filter(|p| p.persistence() >= alpha).collect(),
    };
    chosen
        .into_iter()
        .map(|p| {
            let lp = representative_line(field, p.representative)?;
            Ok(DetectedLine {
                r: lp.r,
                theta: lp.theta,
                score: p.birth,
                death: p.death,
                persistence: p.persistence(),
                cell: p.representative,
            })
        })
        .collect()
}
