use alloc::vec::Vec;
use core::f64::consts::PI;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::scale_space::ScaleSpace;
use super::wrap_angle;
use super::{Descriptor, Keypoint, DESCRIPTOR_LEN};

const GRID: usize = 4;
const ORI_BINS: usize = 8;
/// Width of one spatial cell in units of keypoint scale.
const CELL_SCALE: f64 = 3.0;
const CLAMP: f64 = 0.2;

/// Descriptors for `keypoints`, in order. Keypoints whose sampling window
/// falls mostly outside the image (or sees no gradient at all) are skipped;
/// their indices are returned in `skipped`.
#[derive(Debug, Clone, Default)]
pub struct DescriptorSet {
    pub keypoints: Vec<Keypoint>,
    pub descriptors: Vec<Descriptor>,
    pub skipped: Vec<usize>,
}

pub fn compute_descriptors(ss: &ScaleSpace, keypoints: &[Keypoint]) -> DescriptorSet {
    let mut set = DescriptorSet::default();
    for (i, kp) in keypoints.iter().enumerate() {
        match describe(ss, kp) {
            Some(d) => {
                set.keypoints.push(*kp);
                set.descriptors.push(d);
            }
            None => set.skipped.push(i),
        }
    }
    set
}

fn describe(ss: &ScaleSpace, kp: &Keypoint) -> Option<Descriptor> {
    let oct = ss.octaves.get(kp.octave)?;
    let img = oct.gaussians.get(kp.layer)?;
    let (w, h) = (oct.width() as isize, oct.height() as isize);
    let factor = (kp.octave as f64).exp2();
    let scale = kp.scale / factor;
    let cell = CELL_SCALE * scale;
    let radius = (cell * core::f64::consts::SQRT_2 * (GRID as f64 + 1.0) * 0.5).round() as isize;
    let cx = (kp.x / factor).round() as isize;
    let cy = (kp.y / factor).round() as isize;
    // subpixel remainder of the keypoint center
    let fx = kp.x / factor - cx as f64;
    let fy = kp.y / factor - cy as f64;
    let (sin_t, cos_t) = kp.orientation.sin_cos();
    let half = GRID as f64 / 2.0;
    let weight_denom = 2.0 * half * half;
    let px = |x: isize, y: isize| img.data[(y * w + x) as usize] as f64;

    let mut hist = [0.0f64; (GRID + 2) * (GRID + 2) * (ORI_BINS + 2)];
    let idx = |r: usize, c: usize, o: usize| (r * (GRID + 2) + c) * (ORI_BINS + 2) + o;
    let (mut in_window, mut inside) = (0usize, 0usize);

    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let ox = dx as f64 - fx;
            let oy = dy as f64 - fy;
            // rotate into the keypoint frame and express in cell units
            let c_rot = (cos_t * ox + sin_t * oy) / cell;
            let r_rot = (-sin_t * ox + cos_t * oy) / cell;
            let rbin = r_rot + half - 0.5;
            let cbin = c_rot + half - 0.5;
            if rbin <= -1.0 || rbin >= GRID as f64 || cbin <= -1.0 || cbin >= GRID as f64 {
                continue;
            }
            in_window += 1;
            let (x, y) = (cx + dx, cy + dy);
            if x <= 0 || x >= w - 1 || y <= 0 || y >= h - 1 {
                continue;
            }
            inside += 1;
            let gx = px(x + 1, y) - px(x - 1, y);
            let gy = px(x, y + 1) - px(x, y - 1);
            let mag = (gx * gx + gy * gy).sqrt();
            let angle = wrap_angle(gy.atan2(gx) - kp.orientation);
            let obin = angle * ORI_BINS as f64 / (2.0 * PI);
            let weight = (-(c_rot * c_rot + r_rot * r_rot) / weight_denom).exp();
            trilinear(&mut hist, &idx, rbin, cbin, obin, mag * weight);
        }
    }
    if inside * 2 < in_window {
        return None;
    }

    let mut raw = [0.0f64; DESCRIPTOR_LEN];
    for r in 0..GRID {
        for c in 0..GRID {
            for o in 0..ORI_BINS {
                let mut v = hist[idx(r + 1, c + 1, o)];
                if o == 0 {
                    v += hist[idx(r + 1, c + 1, ORI_BINS)];
                }
                raw[(r * GRID + c) * ORI_BINS + o] = v;
            }
        }
    }
    normalize_clamped(&raw)
}

fn trilinear(
    hist: &mut [f64],
    idx: &impl Fn(usize, usize, usize) -> usize,
    rbin: f64,
    cbin: f64,
    obin: f64,
    value: f64,
) {
    let r0 = rbin.floor();
    let c0 = cbin.floor();
    let o0 = obin.floor();
    let (dr, dc, d_o) = (rbin - r0, cbin - c0, obin - o0);
    // shift by one so that bin −1 lands in the padding row/column
    let (r0, c0) = ((r0 + 1.0) as usize, (c0 + 1.0) as usize);
    let o0 = (o0 as usize) % ORI_BINS;
    for (ri, wr) in [(0, 1.0 - dr), (1, dr)] {
        for (ci, wc) in [(0, 1.0 - dc), (1, dc)] {
            for (oi, wo) in [(0, 1.0 - d_o), (1, d_o)] {
                hist[idx(r0 + ri, c0 + ci, o0 + oi)] += value * wr * wc * wo;
            }
        }
    }
}

/// Unit-normalize, clamp each element at 0.2, renormalize.
pub(crate) fn normalize_clamped(raw: &[f64; DESCRIPTOR_LEN]) -> Option<Descriptor> {
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    let clamped: Vec<f64> = raw.iter().map(|v| (v / norm).min(CLAMP)).collect();
    let norm2 = clamped.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut out = [0.0f32; DESCRIPTOR_LEN];
    for (o, v) in out.iter_mut().zip(&clamped) {
        *o = (v / norm2) as f32;
    }
    Some(Descriptor(out))
}
