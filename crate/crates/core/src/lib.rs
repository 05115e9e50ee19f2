//! Line detection in planar point clouds with a continuous Hough score.
//!
//! Every point votes for every line through a kernel of its distance to the
//! line. The resulting score over the Möbius strip of lines is approximated
//! on an adaptive quad-tree with a certified sup-norm error, and lines are
//! selected as the local maxima of highest 0-dimensional persistence.
//!
//! ```
//! use topohough_core::{detect, DetectConfig, KernelSpec, Point, SelectionPolicy};
//!
//! let points: Vec<Point> = (0..20).map(|i| Point::new(i as f64, 0.5 * i as f64 + 1.0)).collect();
//! let cfg = DetectConfig::new(KernelSpec::hat(1.0).unwrap(), 0.02, SelectionPolicy::TopK(1));
//! let found = detect(&points, &cfg).unwrap();
//! assert_eq!(found.lines.len(), 1);
//! ```

pub mod baseline;
pub mod detect;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod lipschitz;
pub mod persistence;
pub mod scene;
pub mod subdivision;
pub mod svg;

pub use detect::{detect, detect_cloud, diagram, DetectConfig, Detection};
pub use error::{Error, Result};
pub use geometry::{
    canonicalize, kernel_eval, point_line_distance, score, sinusoid, KernelKind, KernelSpec, LineParams,
    Normalization, NormalizationMode, Point, PointCloud, ScoreConfig,
};
pub use lipschitz::{global_lipschitz, kernel_tail_lipschitz, local_lipschitz, vertical_distance, ParamBox};
pub use persistence::{
    build_nerve, build_nerve_with, compute_persistence, select_lines, DetectedLine, NerveGraph, NerveOptions,
    PersistencePair, SelectionPolicy,
};
pub use subdivision::{build_approximation, initial_r0, ApproxConfig, Cell, CellField, LipschitzPredicate};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "TOPOHOUGH_THREADS";

/// Sizes the global worker pool from [`THREADS_ENV`] when it is set. Must
/// run before any parallel work; later calls are no-ops.
pub fn configure_threads_from_env() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
    // fails only when the pool already exists, which keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}
