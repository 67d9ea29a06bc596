use alloc::vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::{CurvNet, CurvNetError, Tensor, INPUT_CHANNELS};
use crate::raster::{BBox, RgbImage};

/// Sub-samples per output pixel and axis are capped at this.
const MAX_TAPS: usize = 8;

/// Fraction of the box size added on every side before cropping, so the
/// cylinder silhouette and rims around the label are in view.
pub const CROP_CONTEXT: f64 = 0.6;

/// Network input for the label in `bbox`: the box grown by [`CROP_CONTEXT`],
/// scaled uniformly to fit `size = (h, w)` and centred, with `[0, 1]`
/// channels. Padding and anything outside the image read as 0. Each output
/// pixel averages a grid of bilinear samples covering its footprint, so
/// large crops do not alias.
pub fn prepare_input(image: &RgbImage, bbox: &BBox, size: (usize, usize)) -> Result<Tensor, CurvNetError> {
    if bbox.is_empty() || !bbox.is_finite() {
        return Err(CurvNetError::EmptyBBox);
    }
    let crop = bbox.expand(CROP_CONTEXT);
    let (oh, ow) = size;
    let scale = (crop.w / ow as f64).max(crop.h / oh as f64);
    let ox = (ow as f64 - crop.w / scale) / 2.0;
    let oy = (oh as f64 - crop.h / scale) / 2.0;
    let taps = (scale.ceil() as usize).clamp(1, MAX_TAPS);
    let norm = 1.0 / (255.0 * (taps * taps) as f64);
    // bbox edges sit on pixel boundaries, pixel centres on integers
    let (x_lo, y_lo) = (crop.x.max(-0.5), crop.y.max(-0.5));
    let x_hi = crop.right().min(image.width as f64 - 0.5);
    let y_hi = crop.bottom().min(image.height as f64 - 0.5);

    let plane = oh * ow;
    let mut data = vec![0.0; INPUT_CHANNELS * plane];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = [0.0; 3];
            for j in 0..taps {
                let py = crop.y + (y as f64 - oy + (j as f64 + 0.5) / taps as f64) * scale;
                if py < y_lo || py > y_hi {
                    continue;
                }
                for i in 0..taps {
                    let px = crop.x + (x as f64 - ox + (i as f64 + 0.5) / taps as f64) * scale;
                    if px < x_lo || px > x_hi {
                        continue;
                    }
                    let s = image.sample_bilinear(px, py);
                    acc[0] += s[0];
                    acc[1] += s[1];
                    acc[2] += s[2];
                }
            }
            for c in 0..INPUT_CHANNELS {
                data[c * plane + y * ow + x] = acc[c] * norm;
            }
        }
    }
    Tensor::new(vec![INPUT_CHANNELS, oh, ow], data)
}

/// Diameter (HoI) of the cylinder under the label in `bbox`.
pub fn predict_curvature(net: &CurvNet, image: &RgbImage, bbox: &BBox) -> Result<f64, CurvNetError> {
    let input = prepare_input(image, bbox, net.config().input_size)?;
    net.forward(&input)
}
