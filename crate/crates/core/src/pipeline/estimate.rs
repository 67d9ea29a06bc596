use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::detect::region_features;
use super::{Detection, PipelineConfig, PipelineError, TargetLibrary};
use crate::curvnet::{predict_curvature, CurvNet};
use crate::features::{match_knn, ratio_filter};
use crate::geometry::{label_to_cylinder, CameraIntrinsics, CylinderModel, RigidPose};
use crate::pose::{ransac_pnp, Correspondence, MIN_POINTS};
use crate::raster::{BBox, RgbImage};

/// Where the cylinder diameter comes from.
#[derive(Debug, Clone, Copy)]
pub enum DiameterSource<'a> {
    /// Predicted from the detection crop.
    Network(&'a CurvNet),
    /// Supplied by the caller (ground truth or a known object).
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub target_id: usize,
    /// Cylinder frame in the camera frame.
    pub pose: RigidPose,
    /// HoI.
    pub diameter: f64,
    /// Ratio-test survivors offered to RANSAC.
    pub matches: usize,
    pub inliers: usize,
    /// Mean inlier reprojection error, pixels.
    pub reprojection_error: f64,
}

/// Network diameter for the label in `bbox`, raised to just above `W/π` when
/// smaller (a label cannot wrap more than once around the cylinder).
pub fn predicted_diameter(
    net: &CurvNet,
    image: &RgbImage,
    bbox: &BBox,
    label_width: f64,
) -> Result<f64, PipelineError> {
    Ok(predict_curvature(net, image, bbox)?.max(label_width / core::f64::consts::PI * (1.0 + 1e-9)))
}

/// Pose and diameter of the detected label. Target keypoints are lifted onto
/// a cylinder of the chosen diameter and paired with keypoints found in the
/// (slightly padded) detection box.
pub fn estimate(
    image: &RgbImage,
    detection: &Detection,
    library: &TargetLibrary,
    diameter: DiameterSource<'_>,
    k: &CameraIntrinsics,
    cfg: &PipelineConfig,
) -> Result<Estimate, PipelineError> {
    let entry = library.get(detection.target_id)?;
    let target = &entry.target;
    let label_width = target.label_width();
    let diameter = match diameter {
        DiameterSource::Fixed(d) => d,
        DiameterSource::Network(net) => predicted_diameter(net, image, &detection.bbox, label_width)?,
    };
    let cyl = CylinderModel::new(diameter, label_width)?;

    let region = detection.bbox.expand(cfg.crop_padding).clamp_to(image.width, image.height);
    let feats = region_features(&image.to_gray(), Some(&region), &cfg.sift)?;
    if feats.is_empty() || entry.features.len() < 2 {
        return Err(PipelineError::TooFewMatches { found: 0, needed: MIN_POINTS });
    }
    let matches = ratio_filter(&match_knn(&feats.descriptors, &entry.features.descriptors)?, cfg.match_ratio);

    let corrs: Vec<Correspondence> = matches
        .iter()
        .filter_map(|m| {
            let tk = &entry.features.keypoints[m.train_index];
            let ik = &feats.keypoints[m.query_index];
            let on_label = label_to_cylinder(target.pixel_to_label(tk.x, tk.y), &cyl).ok()?;
            Some(Correspondence::new(on_label, [ik.x, ik.y]))
        })
        .collect();
    if corrs.len() < MIN_POINTS {
        return Err(PipelineError::TooFewMatches { found: corrs.len(), needed: MIN_POINTS });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let est = ransac_pnp(&corrs, k, &cfg.ransac, &mut rng)?;
    Ok(Estimate {
        target_id: detection.target_id,
        pose: est.pose,
        diameter,
        matches: corrs.len(),
        inliers: est.inlier_indices.len(),
        reprojection_error: est.mean_reprojection_error,
    })
}
