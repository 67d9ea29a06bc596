use alloc::vec::Vec;
use core::f64::consts::PI;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use nalgebra::{Matrix3, Vector3};

use super::scale_space::ScaleSpace;
use super::wrap_angle;
use super::{Keypoint, SiftParams};

const MAX_REFINE_STEPS: usize = 5;
const ORI_BINS: usize = 36;
const ORI_SIGMA_FACTOR: f64 = 1.5;
const ORI_RADIUS_FACTOR: f64 = 3.0 * ORI_SIGMA_FACTOR;
const ORI_PEAK_RATIO: f64 = 0.8;

/// Scale-space extrema of the DoG pyramid, refined to subpixel/subscale
/// accuracy and filtered for low contrast and edge response. Orientation is
/// left at zero; see [`assign_orientations`].
pub fn detect_keypoints(ss: &ScaleSpace, params: &SiftParams) -> Vec<Keypoint> {
    let s_per = ss.scales_per_octave;
    let border = params.border;
    let prelim = 0.5 * params.contrast_threshold;
    let mut out = Vec::new();
    for (o, oct) in ss.octaves.iter().enumerate() {
        let (w, h) = (oct.width(), oct.height());
        if w <= 2 * border || h <= 2 * border {
            continue;
        }
        for s in 1..=s_per {
            let cur = &oct.dogs[s];
            for y in border..h - border {
                for x in border..w - border {
                    let v = cur.data[y * w + x];
                    if v.abs() <= prelim as f32 || !is_extremum(&oct.dogs, s, x, y, w) {
                        continue;
                    }
                    if let Some(kp) = refine(ss, params, o, s, x, y) {
                        out.push(kp);
                    }
                }
            }
        }
    }
    out
}

fn is_extremum(dogs: &[crate::raster::GrayImage], s: usize, x: usize, y: usize, w: usize) -> bool {
    let v = dogs[s].data[y * w + x];
    let mut is_max = v > 0.0;
    let mut is_min = v < 0.0;
    for layer in &dogs[s - 1..=s + 1] {
        for yy in y - 1..=y + 1 {
            let row = &layer.data[yy * w + x - 1..yy * w + x + 2];
            for &n in row {
                is_max &= v >= n;
                is_min &= v <= n;
            }
        }
        if !is_max && !is_min {
            return false;
        }
    }
    is_max || is_min
}

fn refine(ss: &ScaleSpace, params: &SiftParams, o: usize, s0: usize, x0: usize, y0: usize) -> Option<Keypoint> {
    let oct = &ss.octaves[o];
    let s_per = ss.scales_per_octave;
    let (w, h) = (oct.width() as isize, oct.height() as isize);
    let border = params.border as isize;
    let (mut x, mut y, mut s) = (x0 as isize, y0 as isize, s0 as isize);
    let d = |s: isize, x: isize, y: isize| oct.dogs[s as usize].data[(y * w + x) as usize] as f64;

    let mut offset = Vector3::zeros();
    let mut grad = Vector3::zeros();
    let mut converged = false;
    for _ in 0..MAX_REFINE_STEPS {
        let v = d(s, x, y);
        grad = Vector3::new(
            (d(s, x + 1, y) - d(s, x - 1, y)) / 2.0,
            (d(s, x, y + 1) - d(s, x, y - 1)) / 2.0,
            (d(s + 1, x, y) - d(s - 1, x, y)) / 2.0,
        );
        let dxx = d(s, x + 1, y) + d(s, x - 1, y) - 2.0 * v;
        let dyy = d(s, x, y + 1) + d(s, x, y - 1) - 2.0 * v;
        let dss = d(s + 1, x, y) + d(s - 1, x, y) - 2.0 * v;
        let dxy = (d(s, x + 1, y + 1) - d(s, x - 1, y + 1) - d(s, x + 1, y - 1) + d(s, x - 1, y - 1)) / 4.0;
        let dxs = (d(s + 1, x + 1, y) - d(s + 1, x - 1, y) - d(s - 1, x + 1, y) + d(s - 1, x - 1, y)) / 4.0;
        let dys = (d(s + 1, x, y + 1) - d(s + 1, x, y - 1) - d(s - 1, x, y + 1) + d(s - 1, x, y - 1)) / 4.0;
        let hess = Matrix3::new(dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss);
        offset = -(hess.lu().solve(&grad)?);
        if offset.iter().all(|c| c.abs() < 0.5) {
            converged = true;
            break;
        }
        if offset.iter().any(|c| !c.is_finite() || c.abs() > 1e6) {
            return None;
        }
        x += offset.x.round() as isize;
        y += offset.y.round() as isize;
        s += offset.z.round() as isize;
        if s < 1 || s > s_per as isize || x < border || x >= w - border || y < border || y >= h - border {
            return None;
        }
    }
    if !converged {
        return None;
    }
    let contrast = d(s, x, y) + 0.5 * grad.dot(&offset);
    if contrast.abs() < params.contrast_threshold {
        return None;
    }
    // principal curvature ratio on the 2D Hessian
    let v = d(s, x, y);
    let dxx = d(s, x + 1, y) + d(s, x - 1, y) - 2.0 * v;
    let dyy = d(s, x, y + 1) + d(s, x, y - 1) - 2.0 * v;
    let dxy = (d(s, x + 1, y + 1) - d(s, x - 1, y + 1) - d(s, x + 1, y - 1) + d(s, x - 1, y - 1)) / 4.0;
    let tr = dxx + dyy;
    let det = dxx * dyy - dxy * dxy;
    let r = params.edge_ratio;
    if det <= 0.0 || tr * tr * r >= (r + 1.0) * (r + 1.0) * det {
        return None;
    }

    let factor = (o as f64).exp2();
    let layer_pos = s as f64 + offset.z;
    Some(Keypoint {
        x: (x as f64 + offset.x) * factor,
        y: (y as f64 + offset.y) * factor,
        scale: ss.level_sigma(layer_pos) * factor,
        orientation: 0.0,
        response: contrast.abs(),
        octave: o,
        layer: s as usize,
        layer_offset: offset.z,
    })
}

/// Dominant gradient orientations around each keypoint. A keypoint with
/// several strong peaks (≥ 80% of the maximum) is duplicated, one copy per
/// peak, keeping the input order.
pub fn assign_orientations(ss: &ScaleSpace, keypoints: &[Keypoint]) -> Vec<Keypoint> {
    let mut out = Vec::with_capacity(keypoints.len());
    for kp in keypoints {
        let hist = orientation_histogram(ss, kp);
        let max = hist.iter().cloned().fold(0.0, f64::max);
        if max <= 0.0 {
            out.push(Keypoint { orientation: 0.0, ..*kp });
            continue;
        }
        for i in 0..ORI_BINS {
            let l = hist[(i + ORI_BINS - 1) % ORI_BINS];
            let r = hist[(i + 1) % ORI_BINS];
            let c = hist[i];
            if c > l && c > r && c >= ORI_PEAK_RATIO * max {
                let bin = i as f64 + 0.5 * (l - r) / (l - 2.0 * c + r);
                let mut angle = bin * 2.0 * PI / ORI_BINS as f64;
                angle = wrap_angle(angle);
                if angle >= 2.0 * PI {
                    angle = 0.0;
                }
                out.push(Keypoint { orientation: angle, ..*kp });
            }
        }
    }
    out
}

fn orientation_histogram(ss: &ScaleSpace, kp: &Keypoint) -> [f64; ORI_BINS] {
    let oct = &ss.octaves[kp.octave];
    let img = &oct.gaussians[kp.layer];
    let (w, h) = (oct.width() as isize, oct.height() as isize);
    let factor = (kp.octave as f64).exp2();
    let sigma = ORI_SIGMA_FACTOR * kp.scale / factor;
    let radius = (ORI_RADIUS_FACTOR * kp.scale / factor).round() as isize;
    let cx = (kp.x / factor).round() as isize;
    let cy = (kp.y / factor).round() as isize;
    let px = |x: isize, y: isize| img.data[(y * w + x) as usize] as f64;

    let mut raw = [0.0; ORI_BINS];
    for dy in -radius..=radius {
        let y = cy + dy;
        if y <= 0 || y >= h - 1 {
            continue;
        }
        for dx in -radius..=radius {
            let x = cx + dx;
            if x <= 0 || x >= w - 1 {
                continue;
            }
            let gx = px(x + 1, y) - px(x - 1, y);
            let gy = px(x, y + 1) - px(x, y - 1);
            let mag = (gx * gx + gy * gy).sqrt();
            let weight = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
            let angle = wrap_angle(gy.atan2(gx));
            let bin = ((angle * ORI_BINS as f64 / (2.0 * PI)).round() as usize) % ORI_BINS;
            raw[bin] += weight * mag;
        }
    }
    // [1 4 6 4 1] / 16 circular smoothing
    let mut hist = [0.0; ORI_BINS];
    for i in 0..ORI_BINS {
        let at = |k: isize| raw[(i as isize + k).rem_euclid(ORI_BINS as isize) as usize];
        hist[i] = (at(-2) + at(2)) / 16.0 + (at(-1) + at(1)) * 4.0 / 16.0 + at(0) * 6.0 / 16.0;
    }
    hist
}
