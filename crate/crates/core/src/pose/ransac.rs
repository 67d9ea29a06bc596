use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use rand::Rng;

use super::{pnp_dlt, refine_pose_lm, Correspondence, PoseError, MIN_POINTS};
use crate::geometry::{CameraIntrinsics, RigidPose};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacParams {
    pub max_iterations: usize,
    /// Reprojection error in pixels below which a correspondence is an inlier.
    pub inlier_threshold: f64,
    pub confidence: f64,
    /// `None` means `max(8, ceil(0.15·n))`.
    pub min_inliers: Option<usize>,
}

impl Default for RansacParams {
    fn default() -> Self {
        RansacParams { max_iterations: 1000, inlier_threshold: 2.0, confidence: 0.99, min_inliers: None }
    }
}

impl RansacParams {
    pub fn required_inliers(&self, n: usize) -> usize {
        self.min_inliers.unwrap_or_else(|| 8.max((0.15 * n as f64).ceil() as usize))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseEstimate {
    /// Cylinder frame expressed in the camera frame.
    pub pose: RigidPose,
    /// Ascending indices into the input correspondences.
    pub inlier_indices: Vec<usize>,
    /// Mean pixel error over the inliers.
    pub mean_reprojection_error: f64,
}

fn inliers(pose: &RigidPose, corrs: &[Correspondence], k: &CameraIntrinsics, threshold: f64) -> Vec<usize> {
    corrs.iter().enumerate().filter(|(_, c)| c.reprojection_error(pose, k) <= threshold).map(|(i, _)| i).collect()
}

fn subset(corrs: &[Correspondence], idx: &[usize]) -> Vec<Correspondence> {
    idx.iter().map(|&i| corrs[i]).collect()
}

/// Iterations needed to draw one all-inlier sample with the given confidence.
fn needed_iterations(inlier_ratio: f64, confidence: f64, cap: usize) -> usize {
    let good = inlier_ratio.powi(MIN_POINTS as i32);
    if good >= 1.0 {
        return 1;
    }
    if good <= 0.0 {
        return cap;
    }
    let n = (1.0 - confidence).ln() / (1.0 - good).ln();
    if n.is_finite() && n < cap as f64 {
        (n.ceil() as usize).max(1)
    } else {
        cap
    }
}

/// Robust pose: 6-point DLT hypotheses, each polished by Levenberg–Marquardt
/// on its own sample, scored by inlier count (ties keep the earlier
/// hypothesis), then the best consensus is refined by
/// Levenberg–Marquardt and its inlier set re-evaluated until stable.
pub fn ransac_pnp<R: Rng + ?Sized>(
    corrs: &[Correspondence],
    k: &CameraIntrinsics,
    params: &RansacParams,
    rng: &mut R,
) -> Result<PoseEstimate, PoseError> {
    let n = corrs.len();
    if n < MIN_POINTS {
        return Err(PoseError::TooFewPoints { needed: MIN_POINTS, got: n });
    }
    let required = params.required_inliers(n);
    let threshold = params.inlier_threshold;

    let mut best: Option<(RigidPose, Vec<usize>)> = None;
    let mut limit = params.max_iterations;
    let mut iteration = 0;
    while iteration < limit {
        iteration += 1;
        let mut sample = rand::seq::index::sample(rng, n, MIN_POINTS).into_vec();
        sample.sort_unstable();
        let chosen = subset(corrs, &sample);
        let Ok(linear) = pnp_dlt(&chosen, k) else {
            continue;
        };
        let hypothesis = refine_pose_lm(&linear, &chosen, k).map_or(linear, |r| r.pose);
        let support = inliers(&hypothesis, corrs, k, threshold);
        if support.len() > best.as_ref().map_or(0, |b| b.1.len()) {
            limit =
                limit.min(needed_iterations(support.len() as f64 / n as f64, params.confidence, params.max_iterations));
            best = Some((hypothesis, support));
        }
    }

    let Some((mut pose, mut support)) = best else {
        return Err(PoseError::NoPose { found: 0, required });
    };
    if support.len() < required.max(MIN_POINTS) {
        return Err(PoseError::NoPose { found: support.len(), required });
    }

    for _ in 0..5 {
        // a linear fit over the whole consensus is usually a better start
        // than the minimal-sample hypothesis
        let chosen = subset(corrs, &support);
        let mut start = pose;
        if let Ok(lin) = pnp_dlt(&chosen, k) {
            if inliers(&lin, corrs, k, threshold).len() >= support.len() {
                start = lin;
            }
        }
        let refined = match refine_pose_lm(&start, &chosen, k) {
            Ok(r) => r.pose,
            Err(_) => refine_pose_lm(&pose, &chosen, k)?.pose,
        };
        let next = inliers(&refined, corrs, k, threshold);
        if next.len() < support.len() {
            break;
        }
        let stable = next == support;
        pose = refined;
        support = next;
        if stable {
            break;
        }
    }

    if support.len() < required {
        return Err(PoseError::NoPose { found: support.len(), required });
    }
    let mean = support.iter().map(|&i| corrs[i].reprojection_error(&pose, k)).sum::<f64>() / support.len() as f64;
    Ok(PoseEstimate { pose, inlier_indices: support, mean_reprojection_error: mean })
}
