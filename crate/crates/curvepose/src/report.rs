use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use curvepose_core::features::Features;
use curvepose_core::pipeline::Estimate;
use serde::{Deserialize, Serialize};

/// What `run` writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseJson {
    pub target_id: usize,
    /// `[w, x, y, z]`, `w ≥ 0`.
    pub quaternion: [f64; 4],
    pub translation: [f64; 3],
    /// Intrinsic XYZ, radians.
    pub euler: [f64; 3],
    pub diameter: f64,
    pub inliers: usize,
    pub reprojection_error: f64,
}

impl From<&Estimate> for PoseJson {
    fn from(e: &Estimate) -> Self {
        PoseJson {
            target_id: e.target_id,
            quaternion: e.pose.quaternion_wxyz(),
            translation: e.pose.translation.into(),
            euler: e.pose.euler_xyz(),
            diameter: e.diameter,
            inliers: e.inliers,
            reprojection_error: e.reprojection_error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointJson {
    pub x: f64,
    pub y: f64,
    pub scale: f64,
    pub orientation: f64,
    pub response: f64,
    pub octave: usize,
    pub layer: usize,
    /// 128 little-endian `f32`, base64.
    pub descriptor: String,
}

/// What `inspect` writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectJson {
    pub width: u32,
    pub height: u32,
    pub keypoints: Vec<KeypointJson>,
}

impl InspectJson {
    pub fn new(width: u32, height: u32, f: &Features) -> Self {
        let keypoints = f
            .keypoints
            .iter()
            .zip(&f.descriptors)
            .map(|(k, d)| {
                let bytes: Vec<u8> = d.0.iter().flat_map(|v| v.to_le_bytes()).collect();
                KeypointJson {
                    x: k.x,
                    y: k.y,
                    scale: k.scale,
                    orientation: k.orientation,
                    response: k.response,
                    octave: k.octave,
                    layer: k.layer,
                    descriptor: STANDARD.encode(bytes),
                }
            })
            .collect();
        InspectJson { width, height, keypoints }
    }
}

/// Inverse of the descriptor encoding in [`KeypointJson`].
pub fn decode_descriptor(s: &str) -> Option<Vec<f32>> {
    let bytes = STANDARD.decode(s).ok()?;
    if bytes.len() % 4 != 0 {
        return None;
    }
    Some(bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}
