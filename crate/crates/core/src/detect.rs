//! The full pipeline: normalize, approximate, compute persistence, select.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{KernelSpec, NormalizationMode, Point, PointCloud, ScoreConfig};
use crate::persistence::{
    build_nerve_with, compute_persistence, select_lines, DetectedLine, NerveOptions, PersistencePair, SelectionPolicy,
};
use crate::subdivision::{build_approximation, ApproxConfig, CellField, LipschitzPredicate};

/// Detector settings. `kernel.sigma` is in the input's units; `epsilon` is
/// in score units of `mode`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    pub kernel: KernelSpec,
    pub mode: NormalizationMode,
    pub epsilon: f64,
    pub selection: SelectionPolicy,
    pub max_depth: u32,
    pub predicate: LipschitzPredicate,
    /// Möbius gluing of the strip; always on outside of debugging.
    pub twisted: bool,
}

impl DetectConfig {
    pub fn new(kernel: KernelSpec, epsilon: f64, selection: SelectionPolicy) -> Self {
        Self {
            kernel,
            mode: NormalizationMode::Mean,
            epsilon,
            selection,
            max_depth: ApproxConfig::default().max_depth,
            predicate: LipschitzPredicate::Local,
            twisted: true,
        }
    }

    pub fn with_mode(mut self, mode: NormalizationMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn approx_config(&self) -> ApproxConfig {
        ApproxConfig { epsilon: self.epsilon, max_depth: self.max_depth, predicate: self.predicate, ..ApproxConfig::default() }
    }
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub field: CellField,
    /// Sorted by persistence, descending.
    pub pairs: Vec<PersistencePair>,
    pub lines: Vec<DetectedLine>,
}

/// Runs the detector on raw points.
pub fn detect(points: &[Point], cfg: &DetectConfig) -> Result<Detection> {
    let cloud = PointCloud::new(points)?;
    detect_cloud(&cloud, cfg)
}

/// Runs the detector on an already normalized cloud; the kernel width is
/// converted through the cloud's normalization.
pub fn detect_cloud(cloud: &PointCloud, cfg: &DetectConfig) -> Result<Detection> {
    if !(cfg.epsilon > 0.0) {
        return invalid(format!("epsilon must be positive, got {}", cfg.epsilon));
    }
    cfg.selection.validate()?;
    let kernel = cloud.normalization().kernel_to_normalized(cfg.kernel);
    let score_cfg = ScoreConfig::new(kernel, cfg.mode);
    let field = build_approximation(cloud, &score_cfg, &cfg.approx_config())?;
    let (pairs, lines) = diagram(&field, cfg.selection, cfg.twisted)?;
    Ok(Detection { field, pairs, lines })
}

/// Persistence pairs and selected lines of an existing field.
pub fn diagram(
    field: &CellField,
    selection: SelectionPolicy,
    twisted: bool,
) -> Result<(Vec<PersistencePair>, Vec<DetectedLine>)> {
    let graph = build_nerve_with(field, NerveOptions { twisted });
    let pairs = compute_persistence(&graph);
    let lines = select_lines(&pairs, field, selection)?;
    Ok((pairs, lines))
}
