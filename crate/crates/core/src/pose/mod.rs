//! Perspective-n-Point pose recovery: linear DLT, Levenberg–Marquardt
//! refinement of reprojection error, and a RANSAC wrapper.

mod dlt;
mod ransac;
mod refine;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use thiserror::Error;

pub use dlt::pnp_dlt;
pub use ransac::{ransac_pnp, PoseEstimate, RansacParams};
pub use refine::{refine_pose_lm, reprojection_jacobian, reprojection_residuals, Refinement};

use crate::geometry::{CameraIntrinsics, RigidPose, Vec3};

/// Minimal sample size of the linear solver.
pub const MIN_POINTS: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PoseError {
    #[error("need at least {needed} correspondences, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("correspondences are degenerate: {0}")]
    RankDeficient(&'static str),
    #[error("recovered pose places the points behind the camera")]
    Cheirality,
    #[error("non-finite reprojection residual")]
    NonFiniteResidual,
    #[error("best consensus has {found} inliers, {required} required")]
    NoPose { found: usize, required: usize },
}

/// A 3D point on the object and where it was observed in the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub object_point: Vec3,
    pub image_point: [f64; 2],
}

impl Correspondence {
    pub fn new(object_point: Vec3, image_point: [f64; 2]) -> Self {
        Correspondence { object_point, image_point }
    }

    /// Pixel distance between the observation and the projection under
    /// `pose`; infinite when the point falls behind the camera.
    pub fn reprojection_error(&self, pose: &RigidPose, k: &CameraIntrinsics) -> f64 {
        let p = pose.transform_point(&self.object_point);
        if p.z <= 0.0 {
            return f64::INFINITY;
        }
        let [u, v] = k.project_unchecked(&p);
        ((u - self.image_point[0]).powi(2) + (v - self.image_point[1]).powi(2)).sqrt()
    }
}
