//! Camera model, rigid transforms, and the flat-label to cylinder-surface map.
//!
//! Conventions: the camera frame is right-handed with +z forward, +x right and
//! +y down in the image. Pixel centers sit at integer coordinates. The label is
//! centered on the −y side of the cylinder, with the cylinder axis along +z and
//! +x to the right when facing the label.

use core::f64::consts::PI;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(&'static str),
    #[error("invalid cylinder model: {0}")]
    InvalidModel(&'static str),
    #[error("label point ({u}, {v}) outside the label")]
    OutsideLabel { u: f64, v: f64 },
    #[error("point is behind the camera (z = {0})")]
    BehindCamera(f64),
}

/// Pinhole projection parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub s: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, s: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self, GeometryError> {
        let k = CameraIntrinsics { fx, fy, s, cx, cy, width, height };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let finite = [self.fx, self.fy, self.s, self.cx, self.cy].iter().all(|v| v.is_finite());
        if !finite {
            return Err(GeometryError::InvalidIntrinsics("non-finite parameter"));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(GeometryError::InvalidIntrinsics("focal lengths must be positive"));
        }
        if !(0.0..self.width as f64).contains(&self.cx) {
            return Err(GeometryError::InvalidIntrinsics("cx outside image"));
        }
        if !(0.0..self.height as f64).contains(&self.cy) {
            return Err(GeometryError::InvalidIntrinsics("cy outside image"));
        }
        Ok(())
    }

    /// Reference 1920×1080 camera (fx 2670, fy 2250) scaled to `width`×`height`.
    pub fn scaled_reference(width: u32, height: u32) -> Self {
        CameraIntrinsics {
            fx: 2670.0 * width as f64 / 1920.0,
            fy: 2250.0 * height as f64 / 1080.0,
            s: 0.0,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
        }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, self.s, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Project a camera-frame point to pixel coordinates.
    pub fn project(&self, p: &Vec3) -> Result<[f64; 2], GeometryError> {
        if !(p.z > 0.0) {
            return Err(GeometryError::BehindCamera(p.z));
        }
        Ok(self.project_unchecked(p))
    }

    #[inline]
    pub(crate) fn project_unchecked(&self, p: &Vec3) -> [f64; 2] {
        [(self.fx * p.x + self.s * p.y) / p.z + self.cx, self.fy * p.y / p.z + self.cy]
    }

    /// Ray direction (z = 1) through pixel `(px, py)`.
    pub fn back_project(&self, px: f64, py: f64) -> Vec3 {
        let y = (py - self.cy) / self.fy;
        let x = (px - self.cx - self.s * y) / self.fx;
        Vec3::new(x, y, 1.0)
    }
}

/// Free-function form of [`CameraIntrinsics::project`].
pub fn project_point(k: &CameraIntrinsics, p_cam: &Vec3) -> Result<[f64; 2], GeometryError> {
    k.project(p_cam)
}

/// Pose of the cylinder frame expressed in the camera frame:
/// `p_cam = R · p_cyl + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vec3,
}

impl Default for RigidPose {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidPose {
    pub fn identity() -> Self {
        RigidPose { rotation: UnitQuaternion::identity(), translation: Vec3::zeros() }
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vec3) -> Self {
        RigidPose { rotation, translation }
    }

    pub fn from_translation(t: Vec3) -> Self {
        RigidPose { rotation: UnitQuaternion::identity(), translation: t }
    }

    pub fn from_rotation(rotation: UnitQuaternion<f64>) -> Self {
        RigidPose { rotation, translation: Vec3::zeros() }
    }

    /// Build from a rotation matrix, projecting onto SO(3) first.
    pub fn from_matrix(r: &Matrix3<f64>, t: Vec3) -> Self {
        let rot = nalgebra::Rotation3::from_matrix_eps(r, 1e-12, 100, nalgebra::Rotation3::identity());
        RigidPose { rotation: UnitQuaternion::from_rotation_matrix(&rot), translation: t }
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn inverse(&self) -> Self {
        let inv = self.rotation.inverse();
        RigidPose { rotation: inv, translation: -(inv * self.translation) }
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &RigidPose) -> Self {
        RigidPose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// Quaternion as `[w, x, y, z]` with `w ≥ 0`.
    pub fn quaternion_wxyz(&self) -> [f64; 4] {
        canonical_wxyz(&self.rotation)
    }

    pub fn euler_xyz(&self) -> [f64; 3] {
        quaternion_to_euler(&self.rotation)
    }
}

pub fn transform_point(pose: &RigidPose, p: &Vec3) -> Vec3 {
    pose.transform_point(p)
}

pub fn pose_inverse(pose: &RigidPose) -> RigidPose {
    pose.inverse()
}

pub fn pose_compose(a: &RigidPose, b: &RigidPose) -> RigidPose {
    a.compose(b)
}

pub fn canonical_wxyz(q: &UnitQuaternion<f64>) -> [f64; 4] {
    let c = q.quaternion().coords;
    // nalgebra stores (i, j, k, w)
    let (w, x, y, z) = (c[3], c[0], c[1], c[2]);
    if w < 0.0 || (w == 0.0 && (x, y, z) < (0.0, 0.0, 0.0)) {
        [-w, -x, -y, -z]
    } else {
        [w, x, y, z]
    }
}

pub fn quaternion_from_wxyz(q: [f64; 4]) -> UnitQuaternion<f64> {
    UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3]))
}

/// Intrinsic XYZ Euler angles (radians) to a unit quaternion:
/// `R = Rx(a) · Ry(b) · Rz(c)`.
pub fn euler_to_quaternion(e: [f64; 3]) -> UnitQuaternion<f64> {
    let qx = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), e[0]);
    let qy = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), e[1]);
    let qz = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), e[2]);
    let q = qx * qy * qz;
    let [w, x, y, z] = canonical_wxyz(&q);
    UnitQuaternion::new_unchecked(Quaternion::new(w, x, y, z))
}

/// Inverse of [`euler_to_quaternion`]. At gimbal lock (|b| = π/2) the last
/// angle is set to zero.
pub fn quaternion_to_euler(q: &UnitQuaternion<f64>) -> [f64; 3] {
    let r = q.to_rotation_matrix().into_inner();
    let sb = r[(0, 2)].clamp(-1.0, 1.0);
    let b = sb.asin();
    if sb.abs() > 1.0 - 1e-12 {
        let a = r[(2, 1)].atan2(r[(1, 1)]);
        return [a, b, 0.0];
    }
    let a = (-r[(1, 2)]).atan2(r[(2, 2)]);
    let c = (-r[(0, 1)]).atan2(r[(0, 0)]);
    [a, b, c]
}

/// Physical description of the labelled cylinder, in HoI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderModel {
    pub diameter: f64,
    pub label_width: f64,
    pub label_height: f64,
}

impl CylinderModel {
    pub fn new(diameter: f64, label_width: f64) -> Result<Self, GeometryError> {
        let m = CylinderModel { diameter, label_width, label_height: 1.0 };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.diameter > 0.0) || !self.diameter.is_finite() {
            return Err(GeometryError::InvalidModel("diameter must be positive"));
        }
        if !(self.label_width > 0.0) || !self.label_width.is_finite() {
            return Err(GeometryError::InvalidModel("label width must be positive"));
        }
        if self.label_height != 1.0 {
            return Err(GeometryError::InvalidModel("label height is the unit length"));
        }
        if self.arc_angle() > 2.0 * PI {
            return Err(GeometryError::InvalidModel("label wraps more than once around the cylinder"));
        }
        Ok(())
    }

    pub fn radius(&self) -> f64 {
        self.diameter / 2.0
    }

    /// Equal to the diameter, since lengths are in units of label height.
    pub fn curvature(&self) -> f64 {
        self.diameter / self.label_height
    }

    /// Angle subtended by the label around the axis.
    pub fn arc_angle(&self) -> f64 {
        self.label_width / self.radius()
    }

    /// Outward surface normal at a label point.
    pub fn normal_at(&self, p: LabelPoint) -> Vec3 {
        let theta = (p.u - self.label_width / 2.0) / self.radius();
        Vec3::new(theta.sin(), -theta.cos(), 0.0)
    }
}

/// Position on the flat label: `u` from the left edge, `v` down from the top.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelPoint {
    pub u: f64,
    pub v: f64,
}

impl LabelPoint {
    pub fn new(u: f64, v: f64) -> Self {
        LabelPoint { u, v }
    }
}

const LABEL_BOUNDS_EPS: f64 = 1e-9;

/// Wrap a flat label point onto the cylinder surface without stretching:
/// horizontal label distance becomes arc length around the axis.
pub fn label_to_cylinder(p: LabelPoint, cyl: &CylinderModel) -> Result<Vec3, GeometryError> {
    cyl.validate()?;
    let in_u = p.u >= -LABEL_BOUNDS_EPS && p.u <= cyl.label_width + LABEL_BOUNDS_EPS;
    let in_v = p.v >= -LABEL_BOUNDS_EPS && p.v <= cyl.label_height + LABEL_BOUNDS_EPS;
    if !(in_u && in_v) {
        return Err(GeometryError::OutsideLabel { u: p.u, v: p.v });
    }
    Ok(wrap_unchecked(p, cyl))
}

#[inline]
pub(crate) fn wrap_unchecked(p: LabelPoint, cyl: &CylinderModel) -> Vec3 {
    let r = cyl.radius();
    let theta = (p.u - cyl.label_width / 2.0) / r;
    Vec3::new(r * theta.sin(), -r * theta.cos(), cyl.label_height / 2.0 - p.v)
}

/// Inverse of the wrap for a point on the cylinder side: `(u, v)` may fall
/// outside the label.
pub fn cylinder_to_label(p: &Vec3, cyl: &CylinderModel) -> LabelPoint {
    let r = cyl.radius();
    let theta = p.x.atan2(-p.y);
    LabelPoint { u: theta * r + cyl.label_width / 2.0, v: cyl.label_height / 2.0 - p.z }
}

/// Points along the label outline, counter-clockwise from the top-left corner,
/// `per_edge` samples per edge (corners included once).
pub fn label_outline(cyl: &CylinderModel, per_edge: usize) -> alloc::vec::Vec<LabelPoint> {
    let n = per_edge.max(1);
    let (w, h) = (cyl.label_width, cyl.label_height);
    let mut pts = alloc::vec::Vec::with_capacity(4 * n);
    for i in 0..n {
        let f = i as f64 / n as f64;
        pts.push(LabelPoint::new(0.0, f * h));
    }
    for i in 0..n {
        let f = i as f64 / n as f64;
        pts.push(LabelPoint::new(f * w, h));
    }
    for i in 0..n {
        let f = i as f64 / n as f64;
        pts.push(LabelPoint::new(w, h - f * h));
    }
    for i in 0..n {
        let f = i as f64 / n as f64;
        pts.push(LabelPoint::new(w - f * w, 0.0));
    }
    pts
}

pub fn label_corners(cyl: &CylinderModel) -> [LabelPoint; 4] {
    let (w, h) = (cyl.label_width, cyl.label_height);
    [LabelPoint::new(0.0, 0.0), LabelPoint::new(w, 0.0), LabelPoint::new(w, h), LabelPoint::new(0.0, h)]
}
