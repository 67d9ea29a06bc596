use std::f64::consts::PI;

use curvepose_core::geometry::{label_outline, label_to_cylinder, CameraIntrinsics, CylinderModel, RigidPose, Vec3};
use curvepose_core::raster::RgbImage;

pub const LABEL_COLOR: [u8; 3] = [255, 40, 40];
pub const BODY_COLOR: [u8; 3] = [40, 220, 255];

const CIRCLE_SEGMENTS: usize = 72;
const GENERATORS: usize = 12;

/// Draw the estimated cylinder over `image`: rims at the label's top and
/// bottom, evenly spaced generator lines, and the label outline on top.
pub fn draw_wireframe(image: &mut RgbImage, pose: &RigidPose, cyl: &CylinderModel, k: &CameraIntrinsics) {
    let r = cyl.radius();
    let half = cyl.label_height / 2.0;
    let at = |theta: f64, z: f64| Vec3::new(r * theta.sin(), -r * theta.cos(), z);

    for z in [half, -half] {
        let rim: Vec<Vec3> =
            (0..=CIRCLE_SEGMENTS).map(|i| at(2.0 * PI * i as f64 / CIRCLE_SEGMENTS as f64, z)).collect();
        polyline(image, pose, k, &rim, BODY_COLOR);
    }
    for i in 0..GENERATORS {
        let theta = 2.0 * PI * i as f64 / GENERATORS as f64;
        polyline(image, pose, k, &[at(theta, half), at(theta, -half)], BODY_COLOR);
    }
    let mut outline: Vec<Vec3> =
        label_outline(cyl, 24).into_iter().filter_map(|p| label_to_cylinder(p, cyl).ok()).collect();
    if let Some(&first) = outline.first() {
        outline.push(first);
    }
    polyline(image, pose, k, &outline, LABEL_COLOR);
}

fn polyline(image: &mut RgbImage, pose: &RigidPose, k: &CameraIntrinsics, points: &[Vec3], color: [u8; 3]) {
    let projected: Vec<Option<[f64; 2]>> = points.iter().map(|p| k.project(&pose.transform_point(p)).ok()).collect();
    for pair in projected.windows(2) {
        if let [Some(a), Some(b)] = pair {
            line(image, *a, *b, color);
        }
    }
}

/// Two-pixel-wide segment; off-image pixels are skipped.
pub fn line(image: &mut RgbImage, a: [f64; 2], b: [f64; 2], color: [u8; 3]) {
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    if !len.is_finite() || len > 1e5 {
        return;
    }
    let steps = len.ceil().max(1.0) as usize;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let x = a[0] + t * (b[0] - a[0]);
        let y = a[1] + t * (b[1] - a[1]);
        for (dx, dy) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)] {
            let (px, py) = ((x + dx).round(), (y + dy).round());
            if px >= 0.0 && py >= 0.0 && px < image.width as f64 && py < image.height as f64 {
                image.put(px as u32, py as u32, color);
            }
        }
    }
}
