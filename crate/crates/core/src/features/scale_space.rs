use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::{FeatureError, SiftParams};
use crate::raster::GrayImage;

/// Smallest image side accepted by [`build_scale_space`].
pub const MIN_IMAGE_SIDE: u32 = 32;

/// One octave: `S + 3` Gaussian levels and the `S + 2` differences between them.
#[derive(Debug, Clone)]
pub struct Octave {
    pub gaussians: Vec<GrayImage>,
    pub dogs: Vec<GrayImage>,
}

impl Octave {
    pub fn width(&self) -> usize {
        self.gaussians[0].width as usize
    }

    pub fn height(&self) -> usize {
        self.gaussians[0].height as usize
    }
}

#[derive(Debug, Clone)]
pub struct ScaleSpace {
    pub octaves: Vec<Octave>,
    pub sigma0: f64,
    pub scales_per_octave: usize,
}

impl ScaleSpace {
    /// Blur (in octave pixels) of level `s`, possibly fractional.
    pub fn level_sigma(&self, s: f64) -> f64 {
        self.sigma0 * (s / self.scales_per_octave as f64).exp2()
    }
}

/// Octave count used when the parameters leave it open.
pub fn default_octaves(width: u32, height: u32) -> usize {
    let side = width.min(height).max(1) as f64;
    ((side.log2().floor() as isize) - 3).max(1) as usize
}

/// Gaussian and difference-of-Gaussian pyramids. Octave `o`, level `s` has
/// total blur `σ0 · 2^(o + s/S)` in input pixels; octave `o` is
/// `⌊dims / 2^o⌋` in size.
pub fn build_scale_space(image: &GrayImage, params: &SiftParams) -> Result<ScaleSpace, FeatureError> {
    if image.width < MIN_IMAGE_SIDE || image.height < MIN_IMAGE_SIDE {
        return Err(FeatureError::ImageTooSmall { width: image.width, height: image.height });
    }
    let s_per = params.scales_per_octave;
    let n_octaves = params.octaves.unwrap_or_else(|| default_octaves(image.width, image.height)).max(1);
    let sigma0 = params.sigma0;

    // incremental blur between consecutive levels
    let sig: Vec<f64> = (0..s_per + 3).map(|s| sigma0 * (s as f64 / s_per as f64).exp2()).collect();
    let incr: Vec<f64> = (1..s_per + 3).map(|s| (sig[s] * sig[s] - sig[s - 1] * sig[s - 1]).sqrt()).collect();

    let pre = (sigma0 * sigma0 - params.input_blur * params.input_blur).max(0.01).sqrt();
    let mut base = gaussian_blur(image, pre);
    let mut octaves = Vec::with_capacity(n_octaves);
    for o in 0..n_octaves {
        if o > 0 {
            let prev: &Octave = &octaves[o - 1];
            base = downsample(&prev.gaussians[s_per]);
            if base.width < 2 || base.height < 2 {
                break;
            }
        }
        let mut gaussians = Vec::with_capacity(s_per + 3);
        gaussians.push(base.clone());
        for s in 1..s_per + 3 {
            let next = gaussian_blur(&gaussians[s - 1], incr[s - 1]);
            gaussians.push(next);
        }
        let dogs = gaussians
            .windows(2)
            .map(|w| GrayImage {
                width: w[0].width,
                height: w[0].height,
                data: w[1].data.iter().zip(&w[0].data).map(|(b, a)| b - a).collect(),
            })
            .collect();
        octaves.push(Octave { gaussians, dogs });
    }
    Ok(ScaleSpace { octaves, sigma0, scales_per_octave: s_per })
}

/// Keep every other pixel: output is `⌊w/2⌋ × ⌊h/2⌋`.
pub fn downsample(img: &GrayImage) -> GrayImage {
    let (w, h) = (img.width / 2, img.height / 2);
    GrayImage::from_fn(w, h, |x, y| img.get(2 * x as usize, 2 * y as usize))
}

/// Separable Gaussian blur with replicated borders.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> GrayImage {
    let radius = ((4.0 * sigma).ceil() as usize).max(1);
    let mut kernel: Vec<f32> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / (2.0 * sigma * sigma)).exp() as f32
        })
        .collect();
    let sum: f32 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= sum);

    let (w, h) = (img.width as usize, img.height as usize);
    let mut tmp = vec![0.0f32; w * h];
    // horizontal pass
    let mut row = vec![0.0f32; w + 2 * radius];
    for y in 0..h {
        let src = &img.data[y * w..(y + 1) * w];
        row[..radius].fill(src[0]);
        row[radius..radius + w].copy_from_slice(src);
        row[radius + w..].fill(src[w - 1]);
        let dst = &mut tmp[y * w..(y + 1) * w];
        for (x, d) in dst.iter_mut().enumerate() {
            *d = row[x..x + 2 * radius + 1].iter().zip(&kernel).map(|(a, k)| a * k).sum();
        }
    }
    // vertical pass, accumulating whole rows
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        let dst = &mut out[y * w..(y + 1) * w];
        for (i, &k) in kernel.iter().enumerate() {
            let sy = (y as isize + i as isize - radius as isize).clamp(0, h as isize - 1) as usize;
            let src = &tmp[sy * w..(sy + 1) * w];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += k * s;
            }
        }
    }
    GrayImage { width: img.width, height: img.height, data: out }
}
