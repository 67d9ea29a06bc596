use alloc::vec::Vec;

use super::{PipelineConfig, PipelineError, TargetLibrary};
use crate::features::{detect_and_describe, match_knn, ratio_filter, Features, SiftParams, MIN_IMAGE_SIDE};
use crate::raster::{BBox, GrayImage, RgbImage};
use crate::synth::GroundTruth;

/// Which target is visible and where.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub target_id: usize,
    /// Pixel box in the image.
    pub bbox: BBox,
    /// Ratio-test survivors that voted for the target (0 when injected).
    pub score: usize,
}

impl Detection {
    /// Ground-truth target and box, bypassing detection.
    pub fn from_ground_truth(truth: &GroundTruth) -> Self {
        Detection { target_id: truth.target_id, bbox: truth.bbox, score: 0 }
    }
}

/// Keypoints inside `region` (whole image when `None`), in image coordinates.
pub(crate) fn region_features(
    gray: &GrayImage,
    region: Option<&BBox>,
    params: &SiftParams,
) -> Result<Features, PipelineError> {
    let Some(region) = region else {
        return Ok(detect_and_describe(gray, params)?);
    };
    let (crop, (x0, y0)) = gray.crop(region).ok_or(PipelineError::RegionTooSmall { width: 0, height: 0 })?;
    if crop.width < MIN_IMAGE_SIDE || crop.height < MIN_IMAGE_SIDE {
        return Err(PipelineError::RegionTooSmall { width: crop.width, height: crop.height });
    }
    let mut f = detect_and_describe(&crop, params)?;
    f.translate(x0 as f64, y0 as f64);
    Ok(f)
}

/// Feature-vote classification: image descriptors are matched against each
/// target, and the target with the most ratio-test survivors wins (ties go to
/// the lower id). The box is the extent of the winning matches plus a
/// margin, or `gt_bbox` unchanged when given, in which case only features
/// inside it vote.
pub fn detect_and_classify(
    image: &RgbImage,
    library: &TargetLibrary,
    cfg: &PipelineConfig,
    gt_bbox: Option<&BBox>,
) -> Result<Detection, PipelineError> {
    if library.is_empty() {
        return Err(PipelineError::EmptyLibrary);
    }
    let gray = image.to_gray();
    let feats = match region_features(&gray, gt_bbox, &cfg.sift) {
        Ok(f) => f,
        Err(PipelineError::RegionTooSmall { .. }) => Features::default(),
        Err(e) => return Err(e),
    };

    let mut best: Option<(usize, Vec<usize>)> = None;
    if !feats.is_empty() {
        for entry in library.entries() {
            if entry.features.len() < 2 {
                continue;
            }
            let matches =
                ratio_filter(&match_knn(&feats.descriptors, &entry.features.descriptors)?, cfg.detection_ratio);
            if matches.len() > best.as_ref().map_or(0, |b| b.1.len()) {
                best = Some((entry.target.id, matches.iter().map(|m| m.query_index).collect()));
            }
        }
    }
    let votes = best.as_ref().map_or(0, |b| b.1.len());
    let Some((target_id, voters)) = best.filter(|b| b.1.len() >= cfg.min_votes) else {
        return Err(PipelineError::NoDetection { best: votes, required: cfg.min_votes });
    };
    let bbox = match gt_bbox {
        Some(b) => *b,
        None => {
            let points: Vec<[f64; 2]> = voters.iter().map(|&i| [feats.keypoints[i].x, feats.keypoints[i].y]).collect();
            BBox::from_points(trim_outliers(&points)).expect("a winner has at least one vote")
        }
        .expand(cfg.bbox_margin)
        .clamp_to(image.width, image.height),
    };
    Ok(Detection { target_id, bbox, score: votes })
}

/// Keep points within 3.5 robust standard deviations (MAD-based) of the
/// median on both axes. Stray votes from the background would otherwise
/// stretch the box across the frame.
fn trim_outliers(points: &[[f64; 2]]) -> impl Iterator<Item = [f64; 2]> + '_ {
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        if v.len() % 2 == 1 {
            v[m]
        } else {
            0.5 * (v[m - 1] + v[m])
        }
    };
    let mut limits = [(0.0, f64::INFINITY); 2];
    for (axis, lim) in limits.iter_mut().enumerate() {
        let c = median(points.iter().map(|p| p[axis]).collect());
        let mad = median(points.iter().map(|p| (p[axis] - c).abs()).collect());
        *lim = (c, 3.5 * 1.4826 * mad);
    }
    points.iter().copied().filter(move |p| (0..2).all(|a| (p[a] - limits[a].0).abs() <= limits[a].1))
}
