use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use nalgebra::Quaternion;

use super::{Detection, Estimate, PipelineError};
use crate::geometry::Vec3;
use crate::raster::BBox;
use crate::synth::GroundTruth;

/// IoU a detection needs to count as a success.
pub const SUCCESS_IOU: f64 = 0.5;

const UNIT_TOL: f64 = 1e-6;

/// Angle of the relative rotation, `2·acos(|⟨q1, q2⟩|)`, in `[0, π]`.
pub fn rotation_error(q1: &Quaternion<f64>, q2: &Quaternion<f64>) -> Result<f64, PipelineError> {
    for q in [q1, q2] {
        let n = q.norm();
        if !((n - 1.0).abs() <= UNIT_TOL) {
            return Err(PipelineError::NonUnitQuaternion(n));
        }
    }
    let dot = q1.coords.dot(&q2.coords).abs().min(1.0);
    Ok(2.0 * dot.acos())
}

pub fn translation_error(t1: &Vec3, t2: &Vec3) -> f64 {
    (t1 - t2).norm()
}

pub fn diameter_error(d1: f64, d2: f64) -> f64 {
    (d1 - d2).abs()
}

/// Intersection over union; 0 when the boxes are disjoint or both empty.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection(b).map_or(0.0, |i| i.area());
    let union = a.area() + b.area() - inter;
    if union > 0.0 {
        (inter / union).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// How much of the pipeline runs on ground truth during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ablation {
    /// Detection, predicted diameter, pose.
    Full,
    /// Ground-truth box (the target is still classified by votes inside it).
    GtBBox,
    /// Ground-truth target, box and diameter; only features and PnP run.
    GtAll,
}

impl Ablation {
    pub fn name(&self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::GtBBox => "gtbbox",
            Ablation::GtAll => "gtall",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "full" => Some(Ablation::Full),
            "gtbbox" => Some(Ablation::GtBBox),
            "gtall" => Some(Ablation::GtAll),
            _ => None,
        }
    }
}

/// One evaluated sample. Metric cells are `None` when the stage producing
/// them failed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRecord {
    pub sample: usize,
    /// A detection was returned and its IoU with the truth is at least 0.5.
    pub success: bool,
    pub iou: Option<f64>,
    /// Wall-clock seconds spent in `estimate`; `None` when it did not run.
    pub time_s: Option<f64>,
    pub diameter_err: Option<f64>,
    pub rotation_err: Option<f64>,
    pub translation_err: Option<f64>,
}

pub fn score_sample(
    sample: usize,
    truth: &GroundTruth,
    detection: Option<&Detection>,
    estimate: Option<&Estimate>,
    time_s: Option<f64>,
) -> EvalRecord {
    let overlap = detection.map(|d| iou(&d.bbox, &truth.bbox));
    let true_pose = truth.pose();
    EvalRecord {
        sample,
        success: overlap.is_some_and(|v| v >= SUCCESS_IOU),
        iou: overlap,
        time_s,
        diameter_err: estimate.map(|e| diameter_error(e.diameter, truth.diameter)),
        rotation_err: estimate
            .and_then(|e| rotation_error(e.pose.rotation.quaternion(), true_pose.rotation.quaternion()).ok()),
        translation_err: estimate.map(|e| translation_error(&e.pose.translation, &true_pose.translation)),
    }
}

/// Mean and population standard deviation of the filled cells of a column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnSummary {
    pub count: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

impl ColumnSummary {
    /// Values are summed in sorted order, so the result does not depend on
    /// record order.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return ColumnSummary { count: 0, mean: None, std: None };
        }
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let mut sq: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
        sq.sort_by(f64::total_cmp);
        let var = sq.iter().sum::<f64>() / n;
        ColumnSummary { count: v.len(), mean: Some(mean), std: Some(var.sqrt()) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSummary {
    pub samples: usize,
    pub success_rate: f64,
    pub iou: ColumnSummary,
    pub time_s: ColumnSummary,
    pub diameter_err: ColumnSummary,
    pub rotation_err: ColumnSummary,
    pub translation_err: ColumnSummary,
}

pub fn summarize(records: &[EvalRecord]) -> EvalSummary {
    let successes = records.iter().filter(|r| r.success).count();
    EvalSummary {
        samples: records.len(),
        success_rate: if records.is_empty() { 0.0 } else { successes as f64 / records.len() as f64 },
        iou: ColumnSummary::of(records.iter().filter_map(|r| r.iou)),
        time_s: ColumnSummary::of(records.iter().filter_map(|r| r.time_s)),
        diameter_err: ColumnSummary::of(records.iter().filter_map(|r| r.diameter_err)),
        rotation_err: ColumnSummary::of(records.iter().filter_map(|r| r.rotation_err)),
        translation_err: ColumnSummary::of(records.iter().filter_map(|r| r.translation_err)),
    }
}
