//! Scale-invariant keypoints and descriptors, and descriptor matching.
//!
//! The detector follows the classic difference-of-Gaussians recipe:
//! a Gaussian pyramid with `S + 3` levels per octave, 3×3×3 extrema of the
//! DoG stack refined by a quadratic fit, contrast and edge-response
//! rejection, 36-bin orientation histograms, and 4×4×8 gradient histograms
//! as descriptors. Matching is exact 2-NN with a ratio test.

mod descriptor;
mod detect;
mod matching;
mod scale_space;

use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use thiserror::Error;

pub use descriptor::{compute_descriptors, DescriptorSet};
pub use detect::{assign_orientations, detect_keypoints};
pub use matching::{match_knn, ratio_filter, Match};
pub use scale_space::{
    build_scale_space, default_octaves, downsample, gaussian_blur, Octave, ScaleSpace, MIN_IMAGE_SIDE,
};

use crate::raster::GrayImage;

pub const DESCRIPTOR_LEN: usize = 128;

/// Ratio used for the 2-NN ratio test unless configured otherwise.
pub const DEFAULT_RATIO: f32 = 0.95;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error("image {width}x{height} is smaller than the 32x32 minimum")]
    ImageTooSmall { width: u32, height: u32 },
    #[error("need at least 2 train descriptors for 2-NN matching, got {0}")]
    TooFewTrainDescriptors(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiftParams {
    pub sigma0: f64,
    pub scales_per_octave: usize,
    /// Minimum |DoG| at the refined extremum, for intensities in `[0, 1]`.
    pub contrast_threshold: f64,
    /// Maximum ratio of principal curvatures.
    pub edge_ratio: f64,
    /// Blur assumed to be already present in the input.
    pub input_blur: f64,
    /// `None` picks a count from the image size.
    pub octaves: Option<usize>,
    /// Extrema closer than this to an octave border are ignored.
    pub border: usize,
}

impl Default for SiftParams {
    fn default() -> Self {
        SiftParams {
            sigma0: 1.6,
            scales_per_octave: 3,
            contrast_threshold: 0.03,
            edge_ratio: 10.0,
            input_blur: 0.5,
            octaves: None,
            border: 5,
        }
    }
}

/// A scale-space feature. Positions are in input-image pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    /// Blur σ of the feature, in input pixels.
    pub scale: f64,
    /// Radians in `[0, 2π)`, measured from +x toward +y (image down).
    pub orientation: f64,
    /// |DoG| at the refined extremum.
    pub response: f64,
    pub octave: usize,
    pub layer: usize,
    pub layer_offset: f64,
}

/// 128 non-negative components with unit L2 norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Descriptor(pub [f32; DESCRIPTOR_LEN]);

impl Descriptor {
    #[inline]
    pub fn distance_squared(&self, other: &Descriptor) -> f32 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn distance(&self, other: &Descriptor) -> f32 {
        self.distance_squared(other).sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt()
    }
}

/// Keypoints and their descriptors, index-aligned.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Features {
    pub keypoints: Vec<Keypoint>,
    pub descriptors: Vec<Descriptor>,
}

impl Features {
    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }

    /// Shift every keypoint by `(dx, dy)`, e.g. from crop to image coordinates.
    pub fn translate(&mut self, dx: f64, dy: f64) {
        for kp in &mut self.keypoints {
            kp.x += dx;
            kp.y += dy;
        }
    }
}

/// `a` reduced to `[0, 2π)`.
pub(crate) fn wrap_angle(a: f64) -> f64 {
    let tau = 2.0 * core::f64::consts::PI;
    let r = a % tau;
    if r < 0.0 {
        r + tau
    } else {
        r
    }
}

/// Full detection: scale space, extrema, orientations, descriptors.
pub fn detect_and_describe(image: &GrayImage, params: &SiftParams) -> Result<Features, FeatureError> {
    let ss = build_scale_space(image, params)?;
    let kps = detect_keypoints(&ss, params);
    let oriented = assign_orientations(&ss, &kps);
    let set = compute_descriptors(&ss, &oriented);
    Ok(Features { keypoints: set.keypoints, descriptors: set.descriptors })
}
