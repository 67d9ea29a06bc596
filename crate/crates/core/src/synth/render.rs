use super::{label_bbox, Background, GroundTruth, SceneConfig, SceneSample, SynthError, TargetImage};
use crate::geometry::{CylinderModel, LabelPoint, Vec3};
use crate::raster::RgbImage;
#[cfg(not(feature = "std"))]
use num_traits::Float;

/// What a single camera ray hits first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceHit {
    Label(LabelPoint),
    Body,
    Cap,
    Miss,
}

/// Ray caster for one scene, with the camera expressed in the cylinder frame.
#[derive(Debug, Clone)]
pub struct Tracer<'a> {
    scene: &'a SceneConfig,
    cyl: CylinderModel,
    origin: Vec3,
    to_cyl: nalgebra::UnitQuaternion<f64>,
}

impl<'a> Tracer<'a> {
    pub fn new(scene: &'a SceneConfig, label_width: f64) -> Result<Self, SynthError> {
        let cyl = CylinderModel::new(scene.diameter, label_width)?;
        let inv = scene.pose.inverse();
        let origin = inv.translation;
        let r = cyl.radius();
        let inside_radially = origin.x * origin.x + origin.y * origin.y <= r * r;
        if inside_radially && origin.z.abs() <= scene.cylinder_height / 2.0 {
            return Err(SynthError::CameraInsideCylinder);
        }
        Ok(Tracer { scene, cyl, origin, to_cyl: inv.rotation })
    }

    pub fn cylinder(&self) -> &CylinderModel {
        &self.cyl
    }

    /// Trace the ray through continuous pixel position `(px, py)`.
    pub fn trace(&self, px: f64, py: f64) -> SurfaceHit {
        self.trace_dir(&self.scene.intrinsics.back_project(px, py))
    }

    fn trace_dir(&self, dir_cam: &Vec3) -> SurfaceHit {
        let o = self.origin;
        let d = self.to_cyl * dir_cam;
        let r = self.cyl.radius();
        let half = self.scene.cylinder_height / 2.0;
        let mut best = f64::INFINITY;
        let mut hit = SurfaceHit::Miss;

        // side: |o.xy + λ d.xy|² = r²
        let a = d.x * d.x + d.y * d.y;
        if a > 0.0 {
            let b = 2.0 * (o.x * d.x + o.y * d.y);
            let c = o.x * o.x + o.y * o.y - r * r;
            let disc = b * b - 4.0 * a * c;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                for lambda in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
                    if lambda > 0.0 {
                        let p = o + d * lambda;
                        if p.z.abs() <= half {
                            best = lambda;
                            hit = self.classify_side(&p);
                            break;
                        }
                    }
                }
            }
        }
        // caps
        if d.z != 0.0 {
            for z in [half, -half] {
                let lambda = (z - o.z) / d.z;
                if lambda > 0.0 && lambda < best {
                    let p = o + d * lambda;
                    if p.x * p.x + p.y * p.y <= r * r {
                        best = lambda;
                        hit = SurfaceHit::Cap;
                    }
                }
            }
        }
        hit
    }

    fn classify_side(&self, p: &Vec3) -> SurfaceHit {
        let lp = crate::geometry::cylinder_to_label(p, &self.cyl);
        let inside = lp.u >= 0.0 && lp.u <= self.cyl.label_width && lp.v >= 0.0 && lp.v <= self.cyl.label_height;
        if inside {
            SurfaceHit::Label(lp)
        } else {
            SurfaceHit::Body
        }
    }
}

/// Render a scene and its ground truth.
pub fn render(scene: &SceneConfig, library: &[TargetImage], panoramas: &[RgbImage]) -> Result<SceneSample, SynthError> {
    let target = library.iter().find(|t| t.id == scene.target_id).ok_or(SynthError::UnknownTarget(scene.target_id))?;
    if let Background::Panorama { index, .. } = scene.background {
        if index >= panoramas.len() {
            return Err(SynthError::MissingPanorama(index));
        }
    }
    let tracer = Tracer::new(scene, target.label_width())?;
    let k = &scene.intrinsics;
    let ss = scene.supersample.max(1);
    let inv_n = 1.0 / (ss * ss) as f64;
    let body = scene.body_color.map(|c| c as f64);
    let cap = body.map(|c| c * 0.8);

    let mut image = RgbImage::new(k.width, k.height);
    for y in 0..k.height {
        for x in 0..k.width {
            let mut acc = [0.0; 3];
            for sy in 0..ss {
                for sx in 0..ss {
                    let px = x as f64 + (sx as f64 + 0.5) / ss as f64 - 0.5;
                    let py = y as f64 + (sy as f64 + 0.5) / ss as f64 - 0.5;
                    let dir = k.back_project(px, py);
                    let c = match tracer.trace_dir(&dir) {
                        SurfaceHit::Label(lp) => {
                            let [tx, ty] = target.label_to_pixel(lp);
                            target.pixels.sample_bilinear(tx, ty)
                        }
                        SurfaceHit::Body => body,
                        SurfaceHit::Cap => cap,
                        SurfaceHit::Miss => scene.background.sample(px, py, &dir, panoramas),
                    };
                    for ch in 0..3 {
                        acc[ch] += c[ch];
                    }
                }
            }
            image.put(x, y, acc.map(|v| (v * inv_n).round().clamp(0.0, 255.0) as u8));
        }
    }

    let cyl = tracer.cylinder();
    let truth = GroundTruth {
        target_id: scene.target_id,
        relative_position: scene.pose.translation.into(),
        relative_rotation_euler: scene.pose.euler_xyz(),
        diameter: scene.diameter,
        label_width: cyl.label_width,
        label_height: cyl.label_height,
        intrinsics: *k,
        bbox: label_bbox(cyl, &scene.pose, k),
    };
    Ok(SceneSample { image, truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CameraIntrinsics, RigidPose};
    use crate::synth::procedural_target;
    use nalgebra::{Matrix3, UnitQuaternion};

    fn frontal_scene(target_id: usize, diameter: f64) -> SceneConfig {
        // camera on the −y axis looking at the label center, image y = −z
        let r = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
        let cam_center = Vec3::new(0.0, -4.0, 0.0);
        let pose = RigidPose::from_matrix(&r, -(r * cam_center));
        SceneConfig {
            target_id,
            diameter,
            pose,
            background: Background::Flat([10, 20, 30]),
            intrinsics: CameraIntrinsics::scaled_reference(640, 480),
            seed: 0,
            cylinder_height: 1.6,
            body_color: [200, 200, 200],
            supersample: 1,
        }
    }

    #[test]
    fn frontal_label_is_horizontally_centered() {
        let lib = [procedural_target(0, 1, 64)];
        let scene = frontal_scene(0, 2.0);
        let sample = render(&scene, &lib, &[]).unwrap();
        let c = sample.truth.bbox.center();
        assert!((c[0] - 320.0).abs() < 1.0, "{c:?}");
        let t = Tracer::new(&scene, lib[0].aspect).unwrap();
        assert!(matches!(t.trace(320.0, 240.0), SurfaceHit::Label(_)));
        assert_eq!(t.trace(2.0, 2.0), SurfaceHit::Miss);
    }

    #[test]
    fn empty_frustum_gives_uniform_background() {
        let lib = [procedural_target(0, 1, 64)];
        let mut scene = frontal_scene(0, 2.0);
        // cylinder far behind the camera
        scene.pose = RigidPose::new(UnitQuaternion::identity(), Vec3::new(0.0, 0.0, -50.0));
        let sample = render(&scene, &lib, &[]).unwrap();
        assert!(sample.image.data.chunks(3).all(|p| p == [10, 20, 30]));
    }

    #[test]
    fn camera_inside_cylinder_is_an_error() {
        let lib = [procedural_target(0, 1, 64)];
        let mut scene = frontal_scene(0, 2.0);
        scene.pose = RigidPose::identity();
        assert_eq!(render(&scene, &lib, &[]).unwrap_err(), SynthError::CameraInsideCylinder);
    }

    #[test]
    fn missing_inputs_are_reported() {
        let lib = [procedural_target(0, 1, 64)];
        let mut scene = frontal_scene(3, 2.0);
        assert_eq!(render(&scene, &lib, &[]).unwrap_err(), SynthError::UnknownTarget(3));
        scene.target_id = 0;
        scene.background = Background::Panorama { index: 0, yaw: 0.0 };
        assert_eq!(render(&scene, &lib, &[]).unwrap_err(), SynthError::MissingPanorama(0));
    }
}
