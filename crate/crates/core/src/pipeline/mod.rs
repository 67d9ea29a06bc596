//! End-to-end orchestration: which target is visible and where, its
//! diameter, matched keypoints lifted onto the cylinder, RANSAC PnP; plus
//! the error metrics and per-sample scoring used by evaluation.

mod detect;
mod estimate;
mod library;
mod metrics;

use thiserror::Error;

pub use detect::{detect_and_classify, Detection};
pub use estimate::{estimate, predicted_diameter, DiameterSource, Estimate};
pub use library::{LibraryEntry, TargetLibrary};
pub use metrics::{
    diameter_error, iou, rotation_error, score_sample, summarize, translation_error, Ablation, ColumnSummary,
    EvalRecord, EvalSummary, SUCCESS_IOU,
};

use crate::curvnet::CurvNetError;
use crate::features::{FeatureError, SiftParams};
use crate::geometry::GeometryError;
use crate::pose::{PoseError, RansacParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("target library is empty")]
    EmptyLibrary,
    #[error("target ids must be 0..n-1 without gaps, found id {0}")]
    TargetIds(usize),
    #[error("unknown target id {0}")]
    UnknownTarget(usize),
    #[error("no target detected (best vote count {best} < {required})")]
    NoDetection { best: usize, required: usize },
    #[error("region {width}x{height} is too small for feature extraction")]
    RegionTooSmall { width: u32, height: u32 },
    #[error("only {found} matches survive the ratio test, {needed} needed")]
    TooFewMatches { found: usize, needed: usize },
    #[error("quaternion norm {0} is not 1")]
    NonUnitQuaternion(f64),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Pose(#[from] PoseError),
    #[error(transparent)]
    Curvature(#[from] CurvNetError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl PipelineError {
    /// True when the failure is "nothing found" rather than "found but no pose".
    pub fn is_no_detection(&self) -> bool {
        matches!(self, PipelineError::NoDetection { .. } | PipelineError::EmptyLibrary)
    }
}

/// Tunables of the detection and estimation stages.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub sift: SiftParams,
    /// Ratio-test threshold for classification votes.
    pub detection_ratio: f32,
    /// Ratio-test threshold for pose correspondences.
    pub match_ratio: f32,
    /// Votes the winning target needs.
    pub min_votes: usize,
    /// Detected boxes grow by this fraction of their size on every side.
    pub bbox_margin: f64,
    /// Features for pose are extracted from the box grown by this fraction,
    /// so keypoints near the label edge survive the descriptor border rule.
    pub crop_padding: f64,
    pub ransac: RansacParams,
    /// Seed of the RANSAC sampler (fixed per call, so estimates repeat).
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sift: SiftParams::default(),
            detection_ratio: 0.8,
            match_ratio: crate::features::DEFAULT_RATIO,
            min_votes: 8,
            bbox_margin: 0.1,
            crop_padding: 0.1,
            ransac: RansacParams::default(),
            seed: 0,
        }
    }
}
