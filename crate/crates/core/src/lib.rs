//! Pose and curvature estimation for planar labels wrapped around cylinders.
//!
//! Given the flat label artwork and a photograph, the pipeline recovers the
//! 6D pose of the cylinder the label is attached to and the cylinder diameter.
//! Lengths are expressed in HoI (height of image): the physical label height
//! is the unit, so the curvature value of a label equals the diameter.
//!
//! The stages are:
//!
//! 1. **Detect** – feature-vote classification of which target is visible and
//!    where ([`pipeline::detect_and_classify`]).
//! 2. **Curvature** – a small convolutional regressor predicts the diameter
//!    from the bounding-box crop ([`curvnet`]).
//! 3. **Correspond** – SIFT keypoints on the flat target and the crop are
//!    matched with exact 2-NN search and a ratio test ([`features`]).
//! 4. **Pose** – matched target keypoints are lifted onto the cylinder
//!    surface ([`geometry::label_to_cylinder`]) and a RANSAC PnP solve with
//!    Levenberg–Marquardt refinement recovers the pose ([`pose`]).
//!
//! [`synth`] renders labelled cylinders with exact ground truth for training
//! and evaluation.
//!
//! Without the default `std` feature the crate is `no_std` and needs only
//! `alloc`; float math then goes through `libm`. File formats, timing and the
//! command-line interface live in the companion `curvepose` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod curvnet;
pub mod features;
pub mod geometry;
pub mod pipeline;
pub mod pose;
pub mod raster;
pub mod synth;

pub use geometry::{CameraIntrinsics, CylinderModel, LabelPoint, RigidPose};
pub use raster::{BBox, GrayImage, RgbImage};

/// Deterministically derive a child seed from a master seed and an index.
///
/// Used to give every scene, sample, or RANSAC run its own RNG stream so that
/// results do not depend on processing order.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    // splitmix64 over the combined state
    let mut z = master.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15)).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
