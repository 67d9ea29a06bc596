//! Synthetic scenes: a labelled cylinder in front of a pinhole camera,
//! rendered by ray casting with analytically exact ground truth.

mod background;
mod render;
mod targets;

use alloc::vec::Vec;
use core::f64::consts::PI;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use background::Background;
pub use render::{render, SurfaceHit, Tracer};
pub use targets::procedural_target;

use crate::geometry::{self, CameraIntrinsics, CylinderModel, GeometryError, RigidPose, Vec3};
use crate::raster::{BBox, RgbImage};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("target library is empty")]
    EmptyLibrary,
    #[error("unknown target id {0}")]
    UnknownTarget(usize),
    #[error("no visible camera placement found after {0} attempts")]
    NoVisiblePlacement(usize),
    #[error("camera is inside the cylinder")]
    CameraInsideCylinder,
    #[error("panorama background {0} not supplied")]
    MissingPanorama(usize),
    #[error("need at least 10 samples to split, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A flat label image. Its aspect ratio is the label width in HoI.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetImage {
    pub id: usize,
    pub pixels: RgbImage,
    pub aspect: f64,
}

impl TargetImage {
    pub fn new(id: usize, pixels: RgbImage) -> Self {
        let aspect = pixels.width as f64 / pixels.height as f64;
        TargetImage { id, pixels, aspect }
    }

    pub fn label_width(&self) -> f64 {
        self.aspect
    }

    /// Label coordinates (HoI) of a texture pixel position.
    pub fn pixel_to_label(&self, x: f64, y: f64) -> geometry::LabelPoint {
        let h = self.pixels.height as f64;
        geometry::LabelPoint::new((x + 0.5) / h, (y + 0.5) / h)
    }

    /// Texture pixel position of a label point.
    pub fn label_to_pixel(&self, p: geometry::LabelPoint) -> [f64; 2] {
        let h = self.pixels.height as f64;
        [p.u * h - 0.5, p.v * h - 0.5]
    }
}

/// Everything needed to render one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub target_id: usize,
    /// Cylinder diameter in HoI.
    pub diameter: f64,
    /// Cylinder frame expressed in the camera frame.
    pub pose: RigidPose,
    pub background: Background,
    pub intrinsics: CameraIntrinsics,
    pub seed: u64,
    /// Cylinder length along its axis, HoI. The label is centered on it.
    pub cylinder_height: f64,
    pub body_color: [u8; 3],
    /// Rays per pixel along each axis.
    pub supersample: u32,
}

/// Ground-truth record accompanying a rendered image.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub target_id: usize,
    pub relative_position: [f64; 3],
    /// Intrinsic XYZ Euler angles, radians.
    pub relative_rotation_euler: [f64; 3],
    pub diameter: f64,
    pub label_width: f64,
    pub label_height: f64,
    pub intrinsics: CameraIntrinsics,
    pub bbox: BBox,
}

impl GroundTruth {
    pub fn pose(&self) -> RigidPose {
        RigidPose::new(geometry::euler_to_quaternion(self.relative_rotation_euler), Vec3::from(self.relative_position))
    }

    pub fn cylinder(&self) -> CylinderModel {
        CylinderModel { diameter: self.diameter, label_width: self.label_width, label_height: self.label_height }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSample {
    pub image: RgbImage,
    pub truth: GroundTruth,
}

/// Which background families the generator may draw from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundMix {
    pub flat: bool,
    pub noise: bool,
    /// Number of user-supplied panoramas available to the renderer.
    pub panoramas: usize,
}

/// Sampling ranges for [`generate_scene`].
#[derive(Debug, Clone, PartialEq)]
pub struct SceneDistribution {
    pub intrinsics: CameraIntrinsics,
    /// Diameter range as multiples of the label width.
    pub diameter_factor: (f64, f64),
    /// Camera distance to the label center, HoI.
    pub distance: (f64, f64),
    /// Maximum angle between the label-center normal and the viewing direction.
    pub max_grazing_deg: f64,
    /// Symmetric range of camera elevation relative to the label center.
    pub elevation_deg: f64,
    pub roll_deg: f64,
    /// Every label point must be seen at less than this angle from its normal.
    pub edge_view_limit_deg: f64,
    /// Projected label must stay this far inside the frame.
    pub margin_px: f64,
    /// Fraction of the frame size over which the label center may wander.
    pub offset_fraction: f64,
    pub cylinder_height: f64,
    pub backgrounds: BackgroundMix,
    pub supersample: u32,
    pub max_attempts: usize,
}

impl SceneDistribution {
    pub fn new(intrinsics: CameraIntrinsics) -> Self {
        SceneDistribution {
            intrinsics,
            diameter_factor: (1.0, 2.0),
            distance: (3.2, 5.5),
            max_grazing_deg: 30.0,
            elevation_deg: 20.0,
            roll_deg: 15.0,
            edge_view_limit_deg: 78.0,
            margin_px: 4.0,
            offset_fraction: 0.35,
            cylinder_height: 1.6,
            backgrounds: BackgroundMix { flat: true, noise: true, panoramas: 0 },
            supersample: 2,
            max_attempts: 100,
        }
    }

    /// 640×480 with the reference intrinsics scaled down.
    pub fn desk_default() -> Self {
        Self::new(CameraIntrinsics::scaled_reference(640, 480))
    }
}

/// Sample the scene with sequence number `index`. Targets are used in order,
/// cycling through the library; all randomness comes from
/// `derive_seed(master_seed, index)` so scenes can be produced in any order.
pub fn generate_scene(
    library: &[TargetImage],
    dist: &SceneDistribution,
    index: u64,
    master_seed: u64,
) -> Result<SceneConfig, SynthError> {
    if library.is_empty() {
        return Err(SynthError::EmptyLibrary);
    }
    let seed = crate::derive_seed(master_seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = &library[(index % library.len() as u64) as usize];
    let label_width = target.label_width();
    let diameter = label_width * rng.random_range(dist.diameter_factor.0..=dist.diameter_factor.1);
    let cyl = CylinderModel::new(diameter, label_width)?;

    let background = pick_background(&dist.backgrounds, &mut rng);
    let body = [rng.random_range(150..=240u8), rng.random_range(150..=240u8), rng.random_range(150..=240u8)];

    for _ in 0..dist.max_attempts {
        let pose = sample_pose(&cyl, dist, &mut rng);
        if placement_is_visible(&cyl, &pose, dist) {
            return Ok(SceneConfig {
                target_id: target.id,
                diameter,
                pose,
                background,
                intrinsics: dist.intrinsics,
                seed,
                cylinder_height: dist.cylinder_height,
                body_color: body,
                supersample: dist.supersample,
            });
        }
    }
    Err(SynthError::NoVisiblePlacement(dist.max_attempts))
}

/// Stateful wrapper handing out consecutive scene indices.
#[derive(Debug, Clone)]
pub struct SceneGenerator {
    pub distribution: SceneDistribution,
    pub master_seed: u64,
    next_index: u64,
}

impl SceneGenerator {
    pub fn new(distribution: SceneDistribution, master_seed: u64) -> Self {
        SceneGenerator { distribution, master_seed, next_index: 0 }
    }

    pub fn next_scene(&mut self, library: &[TargetImage]) -> Result<SceneConfig, SynthError> {
        let scene = generate_scene(library, &self.distribution, self.next_index, self.master_seed)?;
        self.next_index += 1;
        Ok(scene)
    }
}

fn pick_background(mix: &BackgroundMix, rng: &mut ChaCha8Rng) -> Background {
    let mut kinds: Vec<u8> = Vec::new();
    if mix.flat {
        kinds.push(0);
    }
    if mix.noise {
        kinds.push(1);
    }
    if mix.panoramas > 0 {
        kinds.push(2);
    }
    let color = [rng.random_range(0..=255u8), rng.random_range(0..=255u8), rng.random_range(0..=255u8)];
    match kinds.get(rng.random_range(0..kinds.len().max(1))).copied() {
        Some(1) => Background::Noise { seed: rng.random(), scale: rng.random_range(12.0..48.0) },
        Some(2) => {
            Background::Panorama { index: rng.random_range(0..mix.panoramas), yaw: rng.random_range(0.0..2.0 * PI) }
        }
        _ => Background::Flat(color),
    }
}

fn sample_pose(cyl: &CylinderModel, dist: &SceneDistribution, rng: &mut ChaCha8Rng) -> RigidPose {
    let deg = PI / 180.0;
    let az = rng.random_range(-dist.max_grazing_deg..=dist.max_grazing_deg) * deg;
    let el = rng.random_range(-dist.elevation_deg..=dist.elevation_deg) * deg;
    let roll = rng.random_range(-dist.roll_deg..=dist.roll_deg) * deg;
    let range = rng.random_range(dist.distance.0..=dist.distance.1);
    let k = &dist.intrinsics;
    let off_x = rng.random_range(-1.0..=1.0) * dist.offset_fraction * k.width as f64;
    let off_y = rng.random_range(-1.0..=1.0) * dist.offset_fraction * k.height as f64;

    let center = Vec3::new(0.0, -cyl.radius(), 0.0);
    let dir = Vec3::new(az.sin() * el.cos(), -az.cos() * el.cos(), el.sin());
    let eye = center + dir * range;
    let camera_to_cyl = look_at(&eye, &center, roll);
    let r = camera_to_cyl.transpose();
    let mut t = -(r * eye);
    // slide the camera sideways so the label lands off-center
    t.x += off_x * t.z / k.fx;
    t.y += off_y * t.z / k.fy;
    RigidPose::from_matrix(&r, t)
}

/// Rotation whose columns are the camera axes (x right, y down, z forward)
/// expressed in the cylinder frame.
fn look_at(eye: &Vec3, target: &Vec3, roll: f64) -> Matrix3<f64> {
    let f = (target - eye).normalize();
    let down = Vector3::new(0.0, 0.0, -1.0);
    let y = (down - f * down.dot(&f)).normalize();
    let x = y.cross(&f);
    let q = UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(f), roll);
    Matrix3::from_columns(&[q * x, q * y, f])
}

fn placement_is_visible(cyl: &CylinderModel, pose: &RigidPose, dist: &SceneDistribution) -> bool {
    let eye = pose.inverse().translation;
    if eye.x * eye.x + eye.y * eye.y <= cyl.radius() * cyl.radius() {
        return false;
    }
    let k = &dist.intrinsics;
    let cos_limit = (dist.edge_view_limit_deg * PI / 180.0).cos();
    for p in geometry::label_outline(cyl, 16) {
        let surf = geometry::wrap_unchecked(p, cyl);
        let to_eye = eye - surf;
        if cyl.normal_at(p).dot(&to_eye) <= cos_limit * to_eye.norm() {
            return false;
        }
        let cam = pose.transform_point(&surf);
        if cam.z <= 0.0 {
            return false;
        }
        let [px, py] = k.project_unchecked(&cam);
        let m = dist.margin_px;
        if px < m || py < m || px > k.width as f64 - 1.0 - m || py > k.height as f64 - 1.0 - m {
            return false;
        }
    }
    true
}

/// Tight box around the projected label outline.
pub fn label_bbox(cyl: &CylinderModel, pose: &RigidPose, k: &CameraIntrinsics) -> BBox {
    let pts = geometry::label_outline(cyl, 64)
        .into_iter()
        .map(|p| pose.transform_point(&geometry::wrap_unchecked(p, cyl)))
        .filter(|c| c.z > 0.0)
        .map(|c| k.project_unchecked(&c));
    BBox::from_points(pts).unwrap_or(BBox::new(0.0, 0.0, 0.0, 0.0)).clamp_to(k.width, k.height)
}

/// First `⌊0.9·n⌋` samples train, the rest validate, order preserved.
pub fn split_dataset<T>(mut samples: Vec<T>) -> Result<(Vec<T>, Vec<T>), SynthError> {
    let n = samples.len();
    if n < 10 {
        return Err(SynthError::TooFewSamples(n));
    }
    let val = samples.split_off(n * 9 / 10);
    Ok((samples, val))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn library(n: usize) -> Vec<TargetImage> {
        (0..n).map(|i| procedural_target(i, 7, 64)).collect()
    }

    #[test]
    fn targets_cycle_in_order() {
        let lib = library(20);
        let dist = SceneDistribution::desk_default();
        let mut g = SceneGenerator::new(dist, 3);
        let ids: Vec<usize> = (0..40).map(|_| g.next_scene(&lib).unwrap().target_id).collect();
        let expected: Vec<usize> = (0..20).chain(0..20).collect();
        assert_eq!(ids, expected);
    }

    #[test]
    fn generation_is_deterministic() {
        let lib = library(3);
        let dist = SceneDistribution::desk_default();
        let a = generate_scene(&lib, &dist, 5, 42).unwrap();
        let b = generate_scene(&lib, &dist, 5, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_scene(&lib, &dist, 6, 42).unwrap());
    }

    #[test]
    fn diameters_stay_within_one_to_two_label_widths() {
        let lib = library(4);
        let dist = SceneDistribution::desk_default();
        let (mut lo, mut hi) = (f64::MAX, f64::MIN);
        for i in 0..1000 {
            let s = generate_scene(&lib, &dist, i, 11).unwrap();
            let w = lib[s.target_id].aspect;
            lo = lo.min(s.diameter / w);
            hi = hi.max(s.diameter / w);
        }
        assert!(lo >= 1.0 && hi <= 2.0, "{lo} {hi}");
        // and the range is actually explored
        assert!(lo < 1.05 && hi > 1.95, "{lo} {hi}");
    }

    #[test]
    fn empty_library_is_rejected() {
        let dist = SceneDistribution::desk_default();
        assert_eq!(generate_scene(&[], &dist, 0, 0), Err(SynthError::EmptyLibrary));
    }

    #[test]
    fn impossible_placement_errors_out() {
        let lib = library(1);
        let mut dist = SceneDistribution::desk_default();
        dist.distance = (0.2, 0.3);
        assert_eq!(generate_scene(&lib, &dist, 0, 0), Err(SynthError::NoVisiblePlacement(100)));
    }

    #[test]
    fn split_uses_floor_of_ninety_percent() {
        for (n, tr, va) in [(100, 90, 10), (10, 9, 1), (11, 9, 2)] {
            let (a, b) = split_dataset((0..n).collect::<Vec<_>>()).unwrap();
            assert_eq!((a.len(), b.len()), (tr, va));
            assert_eq!(a[0], 0);
            assert_eq!(*b.last().unwrap(), n - 1);
        }
        assert_eq!(split_dataset(vec![0; 9]), Err(SynthError::TooFewSamples(9)));
    }
}
