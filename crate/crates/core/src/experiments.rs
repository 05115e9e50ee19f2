//! Benchmark studies on synthetic scenes: threshold gaps against the voting
//! baseline, detection quality, and sweeps over the kernel width and the
//! approximation budget.
//!
//! Budgets are given in sum units (a line through `m` noiseless points
//! scores `m`) and run as mean-mode budgets `epsilon / |P|`. Trials run in
//! parallel and are collected in trial order, so every table except the
//! timing table is a pure function of the seed.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::baseline::{accumulate, default_r_bins, vote_gap, DEFAULT_THETA_BINS};
use crate::detect::{detect, DetectConfig, Detection};
use crate::error::{invalid, Error, Result};
use crate::geometry::{canonicalize, KernelKind, KernelSpec, LineParams, NormalizationMode};
use crate::io::fmt_f64;
use crate::persistence::SelectionPolicy;
use crate::scene::{gen_scene, random_scene, LineSpec, Scene};

pub const EXTENT: f64 = 32.0;
pub const GAP_COUNTS: [usize; 4] = [18, 17, 16, 15];
pub const SWEEP_POINTS: usize = 18;
const MAX_ASSIGNMENT: usize = 16;

/// Largest `|r|` of a line meeting `[0, extent]^2`.
pub fn r_max(extent: f64) -> f64 {
    extent * 2f64.sqrt()
}

/// Rounds to nine significant digits so that JSON summaries match the
/// precision of the CSV tables.
fn round9(x: f64) -> f64 {
    fmt_f64(x).parse().unwrap_or(x)
}

/// Distance on the Möbius strip of lines, with `r` scaled by `r_max` and
/// `theta` by `pi`. Returns the distance and the raw `|dr|`, `|dtheta|` of
/// the identification that attains it.
pub fn line_distance(a: LineParams, b: LineParams, r_max: f64) -> Result<(f64, f64, f64)> {
    let (a, b) = (canonicalize(a)?, canonicalize(b)?);
    let dt = (a.theta - b.theta).abs();
    let (dr0, dt0) = ((a.r - b.r).abs(), dt);
    let (dr1, dt1) = ((a.r + b.r).abs(), PI - dt);
    let d0 = (dr0 / r_max).hypot(dt0 / PI);
    let d1 = (dr1 / r_max).hypot(dt1 / PI);
    Ok(if d0 <= d1 { (d0, dr0, dt0) } else { (d1, dr1, dt1) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineError {
    pub truth: usize,
    pub detected: usize,
    pub euclidean_err: f64,
    pub abs_dr: f64,
    pub abs_dtheta: f64,
}

/// Minimum, quartiles and maximum with linear interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Some(Self { min: v[0], q1: q(0.25), median: q(0.5), q3: q(0.75), max: v[v.len() - 1] })
    }

    fn rounded(self) -> Self {
        Self {
            min: round9(self.min),
            q1: round9(self.q1),
            median: round9(self.median),
            q3: round9(self.q3),
            max: round9(self.max),
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorStats {
    pub mean: f64,
    pub quartiles: Quartiles,
}

impl ErrorStats {
    pub fn of(values: &[f64]) -> Option<Self> {
        Some(Self { mean: round9(mean(values)), quartiles: Quartiles::of(values)?.rounded() })
    }
}

/// Optimal one-to-one matching of detected to true lines.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport {
    /// One entry per true line, in truth order.
    pub pairs: Vec<LineError>,
    pub total_cost: f64,
    pub euclidean: ErrorStats,
    pub abs_dr: ErrorStats,
    pub abs_dtheta: ErrorStats,
}

/// Matches lines by minimizing the summed [`line_distance`]; exact, by
/// dynamic programming over subsets.
pub fn match_lines(detected: &[LineParams], truth: &[LineParams], r_max: f64) -> Result<MatchReport> {
    let k = truth.len();
    if detected.len() != k {
        return invalid(format!("cannot match {} detected lines to {k} true lines", detected.len()));
    }
    if k == 0 {
        return invalid("no lines to match");
    }
    if k > MAX_ASSIGNMENT {
        return invalid(format!("at most {MAX_ASSIGNMENT} lines can be matched, got {k}"));
    }
    if !(r_max > 0.0) {
        return invalid(format!("r_max must be positive, got {r_max}"));
    }
    let mut dist = vec![vec![(0.0, 0.0, 0.0); k]; k];
    for (t, row) in dist.iter_mut().enumerate() {
        for (d, cell) in row.iter_mut().enumerate() {
            *cell = line_distance(truth[t], detected[d], r_max)?;
        }
    }
    let cost: Vec<Vec<f64>> = dist.iter().map(|row| row.iter().map(|c| c.0).collect()).collect();
    let (total_cost, assignment) = optimal_assignment(&cost);
    let pairs: Vec<LineError> = assignment
        .iter()
        .enumerate()
        .map(|(t, &d)| {
            let (e, dr, dt) = dist[t][d];
            LineError { truth: t, detected: d, euclidean_err: e, abs_dr: dr, abs_dtheta: dt }
        })
        .collect();
    let col = |f: fn(&LineError) -> f64| pairs.iter().map(f).collect::<Vec<f64>>();
    Ok(MatchReport {
        euclidean: ErrorStats::of(&col(|p| p.euclidean_err)).expect("k >= 1"),
        abs_dr: ErrorStats::of(&col(|p| p.abs_dr)).expect("k >= 1"),
        abs_dtheta: ErrorStats::of(&col(|p| p.abs_dtheta)).expect("k >= 1"),
        pairs,
        total_cost,
    })
}

/// Minimum-cost perfect matching of a square cost matrix: row `i` goes to
/// column `result[i]`. Ties resolve to the lexicographically first column
/// choice.
pub fn optimal_assignment(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let k = cost.len();
    let full = 1usize << k;
    // best[mask]: min cost of assigning rows 0..popcount(mask) to columns in mask
    let mut best = vec![f64::INFINITY; full];
    let mut choice = vec![usize::MAX; full];
    best[0] = 0.0;
    for mask in 0..full {
        if !best[mask].is_finite() {
            continue;
        }
        let row = mask.count_ones() as usize;
        if row == k {
            continue;
        }
        for col in 0..k {
            if mask & (1 << col) != 0 {
                continue;
            }
            let next = mask | (1 << col);
            let c = best[mask] + cost[row][col];
            if c < best[next] {
                best[next] = c;
                choice[next] = col;
            }
        }
    }
    let mut assignment = vec![0; k];
    let mut mask = full - 1;
    for row in (0..k).rev() {
        let col = choice[mask];
        assignment[row] = col;
        mask &= !(1 << col);
    }
    (best[full - 1], assignment)
}

/// Detector settings shared by the studies; `epsilon` is in sum units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectorParams {
    pub kernel: KernelSpec,
    pub epsilon: f64,
}

impl DetectorParams {
    pub fn hat(sigma: f64, epsilon: f64) -> Result<Self> {
        Ok(Self { kernel: KernelSpec::hat(sigma)?, epsilon })
    }

    fn config(&self, n_points: usize, selection: SelectionPolicy) -> DetectConfig {
        DetectConfig::new(self.kernel, self.epsilon / n_points as f64, selection).with_mode(NormalizationMode::Mean)
    }

    fn run(&self, scene: &Scene, selection: SelectionPolicy) -> Result<Detection> {
        detect(&scene.points, &self.config(scene.points.len(), selection))
    }
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self::hat(5.0, 5.0).expect("valid defaults")
    }
}

/// Voting baseline settings; `r_max` follows the scene extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaselineParams {
    pub theta_bins: usize,
    /// r bins per unit of length.
    pub resolution: usize,
    /// Non-maximum suppression radius in bins when reading off lines.
    pub nms_radius: usize,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self { theta_bins: DEFAULT_THETA_BINS, resolution: 1, nms_radius: 2 }
    }
}

impl BaselineParams {
    fn accumulate(&self, scene: &Scene) -> Result<crate::baseline::Accumulator> {
        let rm = r_max(scene.extent);
        accumulate(&scene.points, default_r_bins(rm, self.resolution), self.theta_bins, rm)
    }
}

/// Files produced by one study, before anything is written.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub name: String,
    /// `(file name, contents)`, starting with `<name>_raw.csv` and
    /// `<name>_summary.json`.
    pub files: Vec<(String, String)>,
}

impl ExperimentOutput {
    fn new(name: &str, raw_csv: String, summary: &impl Serialize) -> Result<Self> {
        let json = serde_json::to_string_pretty(summary)? + "\n";
        Ok(Self {
            name: name.to_string(),
            files: vec![(format!("{name}_raw.csv"), raw_csv), (format!("{name}_summary.json"), json)],
        })
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }
}

fn persistence_gap(det: &Detection, k: usize) -> f64 {
    let p = |i: usize| det.pairs.get(i).map_or(0.0, |p| p.persistence());
    p(k - 1) - p(k)
}

fn gap_scene(seed: u64, trial: usize, noise: f64) -> Result<Scene> {
    random_scene(&GAP_COUNTS, noise, EXTENT, seed, trial as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRow {
    pub trial: usize,
    /// In sum units.
    pub delta_pers: f64,
    pub delta_vote: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSummary {
    pub trials: usize,
    pub seed: u64,
    pub k: usize,
    pub noise: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub epsilon_mean: f64,
    pub frac_delta_vote_zero: f64,
    pub frac_delta_pers_positive: f64,
    pub delta_pers: Option<Quartiles>,
}

/// Four lines of 18/17/16/15 points per trial; the gap between the 4th and
/// 5th candidate under persistence ordering and under vote counts.
pub fn gap_experiment(
    n_trials: usize,
    seed: u64,
    noise: f64,
    det: &DetectorParams,
    base: &BaselineParams,
) -> Result<(Vec<GapRow>, GapSummary)> {
    let k = GAP_COUNTS.len();
    let n_points: usize = GAP_COUNTS.iter().sum();
    let rows = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let scene = gap_scene(seed, trial, noise)?;
            let found = det.run(&scene, SelectionPolicy::TopK(k))?;
            let acc = base.accumulate(&scene)?;
            Ok(GapRow {
                trial,
                delta_pers: persistence_gap(&found, k) * n_points as f64,
                delta_vote: vote_gap(&acc, k)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let frac = |f: &dyn Fn(&GapRow) -> bool| {
        if rows.is_empty() { 0.0 } else { rows.iter().filter(|r| f(r)).count() as f64 / rows.len() as f64 }
    };
    let summary = GapSummary {
        trials: n_trials,
        seed,
        k,
        noise,
        sigma: det.kernel.sigma,
        epsilon: det.epsilon,
        epsilon_mean: round9(det.epsilon / n_points as f64),
        frac_delta_vote_zero: round9(frac(&|r| r.delta_vote == 0)),
        frac_delta_pers_positive: round9(frac(&|r| r.delta_pers > 0.0)),
        delta_pers: Quartiles::of(&rows.iter().map(|r| r.delta_pers).collect::<Vec<_>>()).map(Quartiles::rounded),
    };
    Ok((rows, summary))
}

pub fn gap_output(rows: &[GapRow], summary: &GapSummary) -> Result<ExperimentOutput> {
    let mut csv = String::from("trial,delta_pers,delta_vote\n");
    for r in rows {
        let _ = writeln!(csv, "{},{},{}", r.trial, fmt_f64(r.delta_pers), r.delta_vote);
    }
    ExperimentOutput::new("gap", csv, summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Persistence,
    Vote,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Persistence => "persistence",
            Method::Vote => "vote",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QualityRow {
    pub trial: usize,
    pub method: Method,
    pub truth: LineParams,
    pub detected: LineParams,
    pub error: LineError,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodQuality {
    /// Trials where the method returned fewer than four lines.
    pub skipped: usize,
    pub euclidean: Option<ErrorStats>,
    pub abs_dr: Option<ErrorStats>,
    pub abs_dtheta: Option<ErrorStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualitySummary {
    pub trials: usize,
    pub seed: u64,
    pub noise: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub persistence: MethodQuality,
    pub vote: MethodQuality,
}

/// Same scenes as the gap study; both methods report four lines which are
/// matched to the truth.
pub fn quality_experiment(
    n_trials: usize,
    seed: u64,
    noise: f64,
    det: &DetectorParams,
    base: &BaselineParams,
) -> Result<(Vec<QualityRow>, QualitySummary)> {
    let k = GAP_COUNTS.len();
    let rm = r_max(EXTENT);
    let per_trial = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let scene = gap_scene(seed, trial, noise)?;
            let truth = scene.truth_lines();
            let ours: Vec<LineParams> =
                det.run(&scene, SelectionPolicy::TopK(k))?.lines.iter().map(|l| l.params()).collect();
            let theirs: Vec<LineParams> =
                base.accumulate(&scene)?.top_lines(k, base.nms_radius).into_iter().map(|(l, _)| l).collect();
            let mut rows = Vec::new();
            let mut skipped = [false; 2];
            for (i, (method, lines)) in [(Method::Persistence, ours), (Method::Vote, theirs)].into_iter().enumerate() {
                if lines.len() < k {
                    skipped[i] = true;
                    continue;
                }
                let report = match_lines(&lines, &truth, rm)?;
                rows.extend(report.pairs.iter().map(|e| QualityRow {
                    trial,
                    method,
                    truth: truth[e.truth],
                    detected: lines[e.detected],
                    error: *e,
                }));
            }
            Ok((rows, skipped))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut skipped = [0usize; 2];
    for (r, s) in per_trial {
        rows.extend(r);
        for i in 0..2 {
            skipped[i] += s[i] as usize;
        }
    }
    let quality = |m: Method, skipped: usize| {
        let sel: Vec<&LineError> = rows.iter().filter(|r| r.method == m).map(|r| &r.error).collect();
        let col = |f: fn(&LineError) -> f64| sel.iter().map(|e| f(e)).collect::<Vec<f64>>();
        MethodQuality {
            skipped,
            euclidean: ErrorStats::of(&col(|e| e.euclidean_err)),
            abs_dr: ErrorStats::of(&col(|e| e.abs_dr)),
            abs_dtheta: ErrorStats::of(&col(|e| e.abs_dtheta)),
        }
    };
    let summary = QualitySummary {
        trials: n_trials,
        seed,
        noise,
        sigma: det.kernel.sigma,
        epsilon: det.epsilon,
        persistence: quality(Method::Persistence, skipped[0]),
        vote: quality(Method::Vote, skipped[1]),
    };
    Ok((rows, summary))
}

pub fn quality_output(rows: &[QualityRow], summary: &QualitySummary) -> Result<ExperimentOutput> {
    let mut csv = String::from("trial,method,r_true,theta_true,r_detected,theta_detected,euclidean_err,abs_dr,abs_dtheta\n");
    for r in rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.trial,
            r.method.name(),
            fmt_f64(r.truth.r),
            fmt_f64(r.truth.theta),
            fmt_f64(r.detected.r),
            fmt_f64(r.detected.theta),
            fmt_f64(r.error.euclidean_err),
            fmt_f64(r.error.abs_dr),
            fmt_f64(r.error.abs_dtheta)
        );
    }
    ExperimentOutput::new("quality", csv, summary)
}

/// Single random line of [`SWEEP_POINTS`] points; detection error of the
/// strongest maximum.
fn single_line_error(scene: &Scene, det: &DetectorParams) -> Result<(f64, usize)> {
    let found = det.run(scene, SelectionPolicy::TopK(1))?;
    let line = found.lines.first().ok_or_else(|| Error::NotFound("detector returned no line".into()))?;
    let (err, _, _) = line_distance(line.params(), scene.truth[0].params, r_max(scene.extent))?;
    Ok((err, found.field.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaRow {
    pub noise: f64,
    pub sigma: f64,
    pub trial: usize,
    pub euclidean_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaCell {
    pub sigma: f64,
    pub mean_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseLevelSummary {
    pub noise: f64,
    pub best_sigma: f64,
    pub best_mean_err: f64,
    pub by_sigma: Vec<SigmaCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaSummary {
    pub trials_per_config: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub epsilon_mean: f64,
    pub levels: Vec<NoiseLevelSummary>,
}

/// Mean error per `(noise, sigma)`. Every sigma sees the same scenes, so the
/// comparison across widths is paired.
pub fn sigma_sweep(
    sigmas: &[f64],
    noise_levels: &[f64],
    trials: usize,
    seed: u64,
    epsilon: f64,
) -> Result<(Vec<SigmaRow>, SigmaSummary)> {
    if sigmas.is_empty() || noise_levels.is_empty() || trials == 0 {
        return invalid("sigma sweep needs at least one sigma, one noise level and one trial");
    }
    for &s in sigmas {
        KernelSpec::hat(s)?;
    }
    let jobs: Vec<(usize, usize, usize)> = (0..noise_levels.len())
        .flat_map(|n| (0..sigmas.len()).flat_map(move |s| (0..trials).map(move |t| (n, s, t))))
        .collect();
    let rows = jobs
        .into_par_iter()
        .map(|(n, s, t)| {
            let noise = noise_levels[n];
            let scene = random_scene(&[SWEEP_POINTS], noise, EXTENT, seed, (n * trials + t) as u64)?;
            let (err, _) = single_line_error(&scene, &DetectorParams::hat(sigmas[s], epsilon)?)?;
            Ok(SigmaRow { noise, sigma: sigmas[s], trial: t, euclidean_err: err })
        })
        .collect::<Result<Vec<_>>>()?;
    let levels = noise_levels
        .iter()
        .enumerate()
        .map(|(n, &noise)| {
            let by_sigma: Vec<SigmaCell> = sigmas
                .iter()
                .enumerate()
                .map(|(s, &sigma)| {
                    let base = (n * sigmas.len() + s) * trials;
                    let errs: Vec<f64> = rows[base..base + trials].iter().map(|r| r.euclidean_err).collect();
                    SigmaCell { sigma, mean_err: mean(&errs) }
                })
                .collect();
            // first minimum wins ties, i.e. the smallest such width
            let best = by_sigma.iter().fold(&by_sigma[0], |b, c| if c.mean_err < b.mean_err { c } else { b });
            NoiseLevelSummary {
                noise,
                best_sigma: best.sigma,
                best_mean_err: round9(best.mean_err),
                by_sigma: by_sigma.iter().map(|c| SigmaCell { sigma: c.sigma, mean_err: round9(c.mean_err) }).collect(),
            }
        })
        .collect();
    let summary = SigmaSummary {
        trials_per_config: trials,
        seed,
        epsilon,
        epsilon_mean: round9(epsilon / SWEEP_POINTS as f64),
        levels,
    };
    Ok((rows, summary))
}

pub fn sigma_output(rows: &[SigmaRow], summary: &SigmaSummary) -> Result<ExperimentOutput> {
    let mut csv = String::from("noise,sigma,trial,euclidean_err\n");
    for r in rows {
        let _ = writeln!(csv, "{},{},{},{}", fmt_f64(r.noise), fmt_f64(r.sigma), r.trial, fmt_f64(r.euclidean_err));
    }
    ExperimentOutput::new("sigma_sweep", csv, summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsRow {
    pub epsilon: f64,
    pub trial: usize,
    pub euclidean_err: f64,
    pub leaves: usize,
    /// Wall-clock time of the detection, single-threaded.
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsLevelSummary {
    pub epsilon: f64,
    pub epsilon_mean: f64,
    pub error: Quartiles,
    pub mean_leaves: f64,
    pub mean_runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsSummary {
    pub trials_per_config: usize,
    pub seed: u64,
    pub sigma: f64,
    pub noise: f64,
    pub levels: Vec<EpsLevelSummary>,
    /// Mean runtime at the smallest budget over the largest.
    pub runtime_ratio: f64,
}

/// Error, tree size and runtime as functions of the budget. Detections run
/// one at a time on a single worker so timings are comparable.
pub fn epsilon_sweep(
    epsilons: &[f64],
    trials: usize,
    seed: u64,
    sigma: f64,
    noise: f64,
) -> Result<(Vec<EpsRow>, EpsSummary)> {
    if epsilons.is_empty() || trials == 0 {
        return invalid("epsilon sweep needs at least one budget and one trial");
    }
    let scenes = (0..trials)
        .map(|t| random_scene(&[SWEEP_POINTS], noise, EXTENT, seed, t as u64))
        .collect::<Result<Vec<_>>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker: {e}")))?;
    let mut rows = Vec::with_capacity(epsilons.len() * trials);
    for &epsilon in epsilons {
        let det = DetectorParams::hat(sigma, epsilon)?;
        for (trial, scene) in scenes.iter().enumerate() {
            let start = Instant::now();
            let (err, leaves) = pool.install(|| single_line_error(scene, &det))?;
            let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
            rows.push(EpsRow { epsilon, trial, euclidean_err: err, leaves, runtime_ms });
        }
    }
    let levels: Vec<EpsLevelSummary> = rows
        .chunks(trials)
        .map(|chunk| {
            let errs: Vec<f64> = chunk.iter().map(|r| r.euclidean_err).collect();
            let leaves: Vec<f64> = chunk.iter().map(|r| r.leaves as f64).collect();
            let times: Vec<f64> = chunk.iter().map(|r| r.runtime_ms).collect();
            EpsLevelSummary {
                epsilon: chunk[0].epsilon,
                epsilon_mean: round9(chunk[0].epsilon / SWEEP_POINTS as f64),
                error: Quartiles::of(&errs).expect("trials >= 1").rounded(),
                mean_leaves: round9(mean(&leaves)),
                mean_runtime_ms: round9(mean(&times)),
            }
        })
        .collect();
    let by_eps = |pick: fn(f64, f64) -> bool| {
        levels.iter().fold(&levels[0], |b, l| if pick(l.epsilon, b.epsilon) { l } else { b }).mean_runtime_ms
    };
    let (fine, coarse) = (by_eps(|a, b| a < b), by_eps(|a, b| a > b));
    let summary = EpsSummary {
        trials_per_config: trials,
        seed,
        sigma,
        noise,
        runtime_ratio: round9(fine / coarse.max(1e-9)),
        levels,
    };
    Ok((rows, summary))
}

/// The raw table holds the deterministic columns; timings go to a separate
/// `eps_sweep_timing.csv`.
pub fn epsilon_output(rows: &[EpsRow], summary: &EpsSummary) -> Result<ExperimentOutput> {
    let mut csv = String::from("epsilon,trial,euclidean_err,leaves\n");
    let mut timing = String::from("epsilon,trial,runtime_ms\n");
    for r in rows {
        let _ = writeln!(csv, "{},{},{},{}", fmt_f64(r.epsilon), r.trial, fmt_f64(r.euclidean_err), r.leaves);
        let _ = writeln!(timing, "{},{},{}", fmt_f64(r.epsilon), r.trial, fmt_f64(r.runtime_ms));
    }
    let mut out = ExperimentOutput::new("eps_sweep", csv, summary)?;
    out.files.push(("eps_sweep_timing.csv".to_string(), timing));
    Ok(out)
}

/// Three lines of different densities for the end-to-end demo, as
/// `(r, theta, points)`.
pub const DEMO_LINES: [(f64, f64, usize); 3] = [(-2.86, 2.705, 18), (9.23, 1.722, 12), (20.92, 1.021, 8)];
pub const DEMO_NOISE: f64 = 0.5;
pub const DEMO_SEED: u64 = 0;
pub const DEMO_KERNEL: KernelKind = KernelKind::Rbf;
pub const DEMO_SIGMA: f64 = 2.0;
/// Mean-mode budget for the demo.
pub const DEMO_EPSILON: f64 = 0.01;

pub fn demo_specs(noise: f64) -> Vec<LineSpec> {
    DEMO_LINES
        .iter()
        .map(|&(r, theta, n)| LineSpec { params: LineParams::new(r, theta), n_points: n, noise_halfwidth: noise })
        .collect()
}

pub fn demo_scene(seed: u64) -> Result<Scene> {
    gen_scene(&demo_specs(DEMO_NOISE), EXTENT, seed)
}

/// Detector settings of the demo: three lines by persistence.
pub fn demo_config() -> DetectConfig {
    let kernel = KernelSpec::new(DEMO_KERNEL, DEMO_SIGMA).expect("demo sigma is positive");
    DetectConfig::new(kernel, DEMO_EPSILON, SelectionPolicy::TopK(3))
}
