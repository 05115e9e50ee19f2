//! Classical voting Hough transform on a discretized `(r, theta)` grid.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{invalid, Result};
use crate::geometry::{canonicalize, sinusoid, LineParams, Point};

/// Vote counts, row-major with one row per theta column:
/// `counts[t * r_bins + r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulator {
    pub r_bins: usize,
    pub theta_bins: usize,
    pub r_max: f64,
    pub counts: Vec<u32>,
}

/// `r_bins = 2 * ceil(r_max) * resolution`.
pub fn default_r_bins(r_max: f64, resolution: usize) -> usize {
    (2.0 * r_max.ceil()) as usize * resolution.max(1)
}

pub const DEFAULT_THETA_BINS: usize = 180;

/// Every point votes once per theta column, at the bin containing its dual
/// curve evaluated at the column center. Votes outside `[-r_max, r_max]`
/// are dropped.
pub fn accumulate(points: &[Point], r_bins: usize, theta_bins: usize, r_max: f64) -> Result<Accumulator> {
    if r_bins == 0 || theta_bins == 0 {
        return invalid("accumulator needs at least one bin per axis");
    }
    if !(r_max > 0.0 && r_max.is_finite()) {
        return invalid(format!("r_max must be positive, got {r_max}"));
    }
    let mut acc = Accumulator { r_bins, theta_bins, r_max, counts: vec![0; r_bins * theta_bins] };
    for t in 0..theta_bins {
        let theta = acc.theta_center(t);
        for &p in points {
            if let Some(r) = acc.r_bin(sinusoid(p, theta)) {
                acc.counts[t * r_bins + r] += 1;
            }
        }
    }
    Ok(acc)
}

impl Accumulator {
    pub fn bin_width(&self) -> f64 {
        2.0 * self.r_max / self.r_bins as f64
    }

    pub fn theta_center(&self, t: usize) -> f64 {
        (t as f64 + 0.5) * PI / self.theta_bins as f64
    }

    pub fn r_center(&self, r: usize) -> f64 {
        -self.r_max + (r as f64 + 0.5) * self.bin_width()
    }

    pub fn r_bin(&self, r: f64) -> Option<usize> {
        if !(-self.r_max..=self.r_max).contains(&r) {
            return None;
        }
        let i = ((r + self.r_max) / self.bin_width()).floor() as usize;
        Some(i.min(self.r_bins - 1))
    }

    pub fn get(&self, r: usize, t: usize) -> u32 {
        self.counts[t * self.r_bins + r]
    }

    pub fn total_votes(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Bin indices sorted by count descending, ties by row-major index.
    pub fn ranked_bins(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.counts.len()).collect();
        idx.sort_by(|&a, &b| self.counts[b].cmp(&self.counts[a]).then(a.cmp(&b)));
        idx
    }

    pub fn bin_line(&self, index: usize) -> LineParams {
        let (t, r) = (index / self.r_bins, index % self.r_bins);
        LineParams::new(self.r_center(r), self.theta_center(t))
    }

    /// The `k` strongest bins, skipping any bin within `radius` bins (per
    /// axis) of one already taken.
    pub fn top_lines(&self, k: usize, radius: usize) -> Vec<(LineParams, u32)> {
        let mut taken: Vec<usize> = Vec::new();
        for i in self.ranked_bins() {
            if taken.len() == k || self.counts[i] == 0 {
                break;
            }
            let (t, r) = (i / self.r_bins, i % self.r_bins);
            let close = taken.iter().any(|&j| {
                let (tj, rj) = (j / self.r_bins, j % self.r_bins);
                t.abs_diff(tj) <= radius && r.abs_diff(rj) <= radius
            });
            if !close {
                taken.push(i);
            }
        }
        taken
            .into_iter()
            .map(|i| (canonicalize(self.bin_line(i)).expect("bin centers are finite"), self.counts[i]))
            .collect()
    }

    /// Grid as CSV: one row per theta column, one column per r bin.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for t in 0..self.theta_bins {
            let row = &self.counts[t * self.r_bins..(t + 1) * self.r_bins];
            let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }
}

/// Gap between the `k`-th and `(k+1)`-th largest counts.
pub fn vote_gap(acc: &Accumulator, k: usize) -> Result<u32> {
    vote_gap_counts(&acc.counts, k)
}

pub fn vote_gap_counts(counts: &[u32], k: usize) -> Result<u32> {
    if k == 0 {
        return invalid("k must be at least 1");
    }
    let nonzero = counts.iter().filter(|&&c| c > 0).count();
    if nonzero < k + 1 {
        return invalid(format!("need at least {} nonzero bins, found {nonzero}", k + 1));
    }
    let mut sorted = counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    Ok(sorted[k - 1] - sorted[k])
}
