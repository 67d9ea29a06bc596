#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TargetImage;
use crate::raster::RgbImage;

/// Deterministic logo-like artwork: a gradient ground covered with random
/// filled shapes, rings and bars. Every `(id, seed)` pair gives a different
/// image of `height` pixels with aspect ratio in `[1.0, 1.5]`.
pub fn procedural_target(id: usize, seed: u64, height: u32) -> TargetImage {
    let mut rng = ChaCha8Rng::seed_from_u64(crate::derive_seed(seed, id as u64));
    let aspect: f64 = rng.random_range(1.0..=1.5);
    let width = (height as f64 * aspect).round() as u32;
    let (w, h) = (width as f64, height as f64);

    let c0 = random_color(&mut rng);
    let c1 = random_color(&mut rng);
    let mut img = RgbImage::new(width, height);
    for y in 0..height {
        for x in 0..width {
            let t = (x as f64 / w + y as f64 / h) / 2.0;
            img.put(x, y, mix(c0, c1, t));
        }
    }

    // log-uniform sizes: a few large shapes, many small details
    let n_shapes = rng.random_range(140..180);
    for _ in 0..n_shapes {
        let color = random_color(&mut rng);
        let cx = rng.random_range(0.0..w);
        let cy = rng.random_range(0.0..h);
        let size = rng.random_range(0.02f64.ln()..0.2f64.ln()).exp() * h;
        match rng.random_range(0..6) {
            0 => {
                let aspect: f64 = rng.random_range(0.4..2.5);
                let angle = rng.random_range(0.0..core::f64::consts::PI);
                fill(&mut img, color, |x, y| {
                    let (u, v) = rotate(x - cx, y - cy, angle);
                    u.abs() <= size * aspect.sqrt() && v.abs() <= size / aspect.sqrt()
                });
            }
            1 => {
                let ry = size * rng.random_range(0.5..1.5);
                fill(&mut img, color, |x, y| {
                    let dx = (x - cx) / size;
                    let dy = (y - cy) / ry;
                    dx * dx + dy * dy <= 1.0
                });
            }
            2 => {
                let pts: [(f64, f64); 3] = core::array::from_fn(|_| {
                    (cx + rng.random_range(-1.5..1.5) * size, cy + rng.random_range(-1.5..1.5) * size)
                });
                fill(&mut img, color, |x, y| in_triangle((x, y), &pts));
            }
            3 => {
                let thick = rng.random_range(0.2..0.5);
                fill(&mut img, color, |x, y| {
                    let d = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt() / size;
                    d <= 1.0 && d >= 1.0 - thick
                });
            }
            4 => {
                // glyph: a short run of strokes like a word
                let n = rng.random_range(2..6);
                let stroke = (size * 0.15).max(1.0);
                let mut x = cx;
                for _ in 0..n {
                    let gw = size * rng.random_range(0.4..0.8);
                    let kind = rng.random_range(0..3);
                    let (x0, y0) = (x, cy);
                    fill(&mut img, color, |px, py| {
                        let (u, v) = (px - x0, py - y0);
                        let in_box = u >= 0.0 && u <= gw && v >= 0.0 && v <= size;
                        in_box
                            && match kind {
                                0 => u <= stroke || v <= stroke || v >= size - stroke,
                                1 => u <= stroke || u >= gw - stroke || (v - size / 2.0).abs() <= stroke / 2.0,
                                _ => (u - v * gw / size).abs() <= stroke || v >= size - stroke,
                            }
                    });
                    x += gw + stroke * 2.0;
                }
            }
            _ => {
                let angle = rng.random_range(0.0..core::f64::consts::PI);
                let len = size * rng.random_range(2.0..4.0);
                let thick = size * rng.random_range(0.1..0.25);
                fill(&mut img, color, |x, y| {
                    let (u, v) = rotate(x - cx, y - cy, angle);
                    u.abs() <= len && v.abs() <= thick
                });
            }
        }
    }
    TargetImage::new(id, img)
}

fn random_color(rng: &mut ChaCha8Rng) -> [u8; 3] {
    [rng.random(), rng.random(), rng.random()]
}

fn mix(a: [u8; 3], b: [u8; 3], t: f64) -> [u8; 3] {
    core::array::from_fn(|i| (a[i] as f64 * (1.0 - t) + b[i] as f64 * t).round() as u8)
}

fn rotate(x: f64, y: f64, angle: f64) -> (f64, f64) {
    let (s, c) = angle.sin_cos();
    (c * x + s * y, -s * x + c * y)
}

fn in_triangle(p: (f64, f64), t: &[(f64, f64); 3]) -> bool {
    let sign = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| (a.0 - c.0) * (b.1 - c.1) - (b.0 - c.0) * (a.1 - c.1);
    let d1 = sign(p, t[0], t[1]);
    let d2 = sign(p, t[1], t[2]);
    let d3 = sign(p, t[2], t[0]);
    let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(neg && pos)
}

fn fill(img: &mut RgbImage, color: [u8; 3], inside: impl Fn(f64, f64) -> bool) {
    for y in 0..img.height {
        for x in 0..img.width {
            if inside(x as f64 + 0.5, y as f64 + 0.5) {
                img.put(x, y, color);
            }
        }
    }
}
