use core::f64::consts::PI;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::geometry::Vec3;
use crate::raster::RgbImage;

/// What a camera ray sees when it misses the cylinder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Background {
    Flat([u8; 3]),
    /// Colored multi-octave value noise in image space; `scale` is the
    /// coarsest lattice spacing in pixels.
    Noise {
        seed: u64,
        scale: f64,
    },
    /// Equirectangular panorama supplied to the renderer, looked up by the
    /// camera-frame ray direction rotated by `yaw` about the vertical.
    Panorama {
        index: usize,
        yaw: f64,
    },
}

impl Background {
    pub(crate) fn sample(&self, px: f64, py: f64, dir: &Vec3, panoramas: &[RgbImage]) -> [f64; 3] {
        match *self {
            Background::Flat(c) => [c[0] as f64, c[1] as f64, c[2] as f64],
            Background::Noise { seed, scale } => {
                let mut out = [0.0; 3];
                for (ch, o) in out.iter_mut().enumerate() {
                    *o = 255.0 * fractal_noise(px / scale, py / scale, seed.wrapping_add(ch as u64 * 0x51ED));
                }
                out
            }
            Background::Panorama { index, yaw } => match panoramas.get(index) {
                Some(pano) => {
                    let d = dir.normalize();
                    let lon = d.x.atan2(d.z) + yaw;
                    let lat = (-d.y).clamp(-1.0, 1.0).asin();
                    let mut u = lon / (2.0 * PI) + 0.5;
                    u -= u.floor();
                    let v = 0.5 - lat / PI;
                    pano.sample_bilinear(u * pano.width as f64 - 0.5, v * pano.height as f64 - 0.5)
                }
                None => [0.0; 3],
            },
        }
    }
}

fn hash(ix: i64, iy: i64, seed: u64) -> f64 {
    let mut h =
        seed ^ (ix as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (iy as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    h ^= h >> 33;
    h = h.wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    h ^= h >> 33;
    h = h.wrapping_mul(0xC4CE_B9FE_1A85_EC53);
    h ^= h >> 33;
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn value_noise(x: f64, y: f64, seed: u64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let sx = fx * fx * (3.0 - 2.0 * fx);
    let sy = fy * fy * (3.0 - 2.0 * fy);
    let (ix, iy) = (x0 as i64, y0 as i64);
    let a = hash(ix, iy, seed);
    let b = hash(ix + 1, iy, seed);
    let c = hash(ix, iy + 1, seed);
    let d = hash(ix + 1, iy + 1, seed);
    let top = a + (b - a) * sx;
    let bot = c + (d - c) * sx;
    top + (bot - top) * sy
}

fn fractal_noise(x: f64, y: f64, seed: u64) -> f64 {
    let mut sum = 0.0;
    let mut amp = 0.5;
    let mut freq = 1.0;
    let mut norm = 0.0;
    for octave in 0..4u64 {
        sum += amp * value_noise(x * freq, y * freq, seed.wrapping_add(octave * 0x1234_5678));
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    sum / norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_is_bounded_and_deterministic() {
        for i in 0..200 {
            let v = fractal_noise(i as f64 * 0.37, i as f64 * 0.11, 9);
            assert!((0.0..=1.0).contains(&v));
            assert_eq!(v, fractal_noise(i as f64 * 0.37, i as f64 * 0.11, 9));
        }
    }

    #[test]
    fn panorama_lookup_wraps_longitude() {
        let mut pano = RgbImage::new(8, 4);
        pano.put(4, 2, [200, 0, 0]);
        let bg = Background::Panorama { index: 0, yaw: 0.0 };
        // forward ray hits the middle of the panorama
        let c = bg.sample(0.0, 0.0, &Vec3::new(0.0, 0.0, 1.0), core::slice::from_ref(&pano));
        assert!(c[0] > 0.0);
        let missing = bg.sample(0.0, 0.0, &Vec3::new(0.0, 0.0, 1.0), &[]);
        assert_eq!(missing, [0.0; 3]);
    }
}
