//! Minimal owned image buffers and axis-aligned boxes.

use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

/// 8-bit RGB raster, row-major, 3 bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32) -> Self {
        RgbImage { width, height, data: vec![0; width as usize * height as usize * 3] }
    }

    pub fn filled(width: u32, height: u32, color: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for _ in 0..width as usize * height as usize {
            data.extend_from_slice(&color);
        }
        RgbImage { width, height, data }
    }

    /// Wrap raw bytes; returns `None` if the length is wrong.
    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Option<Self> {
        (data.len() == width as usize * height as usize * 3).then_some(RgbImage { width, height, data })
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn put(&mut self, x: u32, y: u32, c: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&c);
    }

    /// Bilinear sample with pixel centers at integer coordinates; edges clamp.
    /// Channels are returned in `[0, 255]`.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> [f64; 3] {
        let maxx = (self.width - 1) as f64;
        let maxy = (self.height - 1) as f64;
        let x = x.clamp(0.0, maxx);
        let y = y.clamp(0.0, maxy);
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let x0 = x0 as u32;
        let y0 = y0 as u32;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let (a, b, c, d) = (self.get(x0, y0), self.get(x1, y0), self.get(x0, y1), self.get(x1, y1));
        let mut out = [0.0; 3];
        for ch in 0..3 {
            let top = a[ch] as f64 * (1.0 - fx) + b[ch] as f64 * fx;
            let bot = c[ch] as f64 * (1.0 - fx) + d[ch] as f64 * fx;
            out[ch] = top * (1.0 - fy) + bot * fy;
        }
        out
    }

    /// Luma in `[0, 1]` using ITU-R BT.601 weights.
    pub fn to_gray(&self) -> GrayImage {
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| (0.299 * p[0] as f32 + 0.587 * p[1] as f32 + 0.114 * p[2] as f32) / 255.0)
            .collect();
        GrayImage { width: self.width, height: self.height, data }
    }

    /// Copy out the integer pixel region covered by `bbox`, clipped to the image.
    /// Returns the crop and its top-left offset.
    pub fn crop(&self, bbox: &BBox) -> Option<(RgbImage, (u32, u32))> {
        let (x0, y0, x1, y1) = bbox.pixel_span(self.width, self.height)?;
        let (w, h) = (x1 - x0, y1 - y0);
        let mut out = RgbImage::new(w, h);
        for y in 0..h {
            let src = ((y0 + y) as usize * self.width as usize + x0 as usize) * 3;
            let dst = y as usize * w as usize * 3;
            out.data[dst..dst + w as usize * 3].copy_from_slice(&self.data[src..src + w as usize * 3]);
        }
        Some((out, (x0, y0)))
    }
}

/// Single-channel float raster, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32) -> Self {
        GrayImage { width, height, data: vec![0.0; width as usize * height as usize] }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> f32) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        GrayImage { width, height, data }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width as usize + x]
    }

    pub fn crop(&self, bbox: &BBox) -> Option<(GrayImage, (u32, u32))> {
        let (x0, y0, x1, y1) = bbox.pixel_span(self.width, self.height)?;
        let out = GrayImage::from_fn(x1 - x0, y1 - y0, |x, y| self.get((x0 + x) as usize, (y0 + y) as usize));
        Some((out, (x0, y0)))
    }
}

/// Axis-aligned box in continuous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h }
    }

    /// Tight box around a set of points; `None` for an empty set.
    pub fn from_points(points: impl IntoIterator<Item = [f64; 2]>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let (mut x0, mut y0, mut x1, mut y1) = (first[0], first[1], first[0], first[1]);
        for p in it {
            x0 = x0.min(p[0]);
            y0 = y0.min(p[1]);
            x1 = x1.max(p[0]);
            y1 = y1.max(p[1]);
        }
        Some(BBox { x: x0, y: y0, w: x1 - x0, h: y1 - y0 })
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn center(&self) -> [f64; 2] {
        [self.x + self.w / 2.0, self.y + self.h / 2.0]
    }

    pub fn is_empty(&self) -> bool {
        !(self.w > 0.0 && self.h > 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x && p[0] <= self.right() && p[1] >= self.y && p[1] <= self.bottom()
    }

    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        (x1 > x0 && y1 > y0).then(|| BBox::new(x0, y0, x1 - x0, y1 - y0))
    }

    /// Grow by `fraction` of the width/height on every side.
    pub fn expand(&self, fraction: f64) -> BBox {
        let dx = self.w * fraction;
        let dy = self.h * fraction;
        BBox::new(self.x - dx, self.y - dy, self.w + 2.0 * dx, self.h + 2.0 * dy)
    }

    /// Clip to the continuous image rectangle `[-0.5, w-0.5] × [-0.5, h-0.5]`.
    pub fn clamp_to(&self, width: u32, height: u32) -> BBox {
        let x0 = self.x.max(-0.5);
        let y0 = self.y.max(-0.5);
        let x1 = self.right().min(width as f64 - 0.5);
        let y1 = self.bottom().min(height as f64 - 0.5);
        BBox::new(x0, y0, (x1 - x0).max(0.0), (y1 - y0).max(0.0))
    }

    /// Integer pixel range `[x0, x1) × [y0, y1)` of pixels whose centers fall
    /// inside the box, clipped to the image. `None` if nothing remains.
    pub fn pixel_span(&self, width: u32, height: u32) -> Option<(u32, u32, u32, u32)> {
        if !self.is_finite() {
            return None;
        }
        let x0 = self.x.ceil().max(0.0);
        let y0 = self.y.ceil().max(0.0);
        let x1 = (self.right().floor() + 1.0).min(width as f64);
        let y1 = (self.bottom().floor() + 1.0).min(height as f64);
        (x1 > x0 && y1 > y0).then_some((x0 as u32, y0 as u32, x1 as u32, y1 as u32))
    }
}
