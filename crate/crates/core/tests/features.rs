use curvepose_core::features::*;
use curvepose_core::synth::procedural_target;
use curvepose_core::GrayImage;
use proptest::prelude::*;

fn blob(size: u32, cx: f64, cy: f64, sigma: f64) -> GrayImage {
    GrayImage::from_fn(size, size, |x, y| {
        let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
        (-d2 / (2.0 * sigma * sigma)).exp() as f32
    })
}

fn textured(seed: u64, height: u32) -> GrayImage {
    procedural_target(seed as usize, 99, height).pixels.to_gray()
}

/// Rotate 90° clockwise: new(x', y') = old(y', h-1-x').
fn rotate90(img: &GrayImage) -> GrayImage {
    let (w, h) = (img.width, img.height);
    GrayImage::from_fn(h, w, |x, y| img.get(y as usize, (h - 1 - x) as usize))
}

fn upscale2(img: &GrayImage) -> GrayImage {
    GrayImage::from_fn(img.width * 2, img.height * 2, |x, y| {
        // pixel centers: output x maps to input (x - 0.5) / 2
        let sx = ((x as f64 - 0.5) / 2.0).clamp(0.0, (img.width - 1) as f64);
        let sy = ((y as f64 - 0.5) / 2.0).clamp(0.0, (img.height - 1) as f64);
        let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(img.width as usize - 1), (y0 + 1).min(img.height as usize - 1));
        let (fx, fy) = ((sx - x0 as f64) as f32, (sy - y0 as f64) as f32);
        let top = img.get(x0, y0) * (1.0 - fx) + img.get(x1, y0) * fx;
        let bot = img.get(x0, y1) * (1.0 - fx) + img.get(x1, y1) * fx;
        top * (1.0 - fy) + bot * fy
    })
}

#[test]
fn constant_image_has_no_keypoints() {
    let img = GrayImage::from_fn(64, 64, |_, _| 0.4);
    let f = detect_and_describe(&img, &SiftParams::default()).unwrap();
    assert!(f.is_empty());
}

#[test]
fn single_blob_gives_one_keypoint_at_its_center() {
    for sigma in [3.0, 5.0, 8.0] {
        let img = blob(96, 47.3, 50.6, sigma);
        let params = SiftParams::default();
        let ss = build_scale_space(&img, &params).unwrap();
        let kps = detect_keypoints(&ss, &params);
        assert_eq!(kps.len(), 1, "sigma {sigma}: {kps:?}");
        let kp = kps[0];
        assert!((kp.x - 47.3).abs() < 1.0 && (kp.y - 50.6).abs() < 1.0, "{kp:?}");
        assert!((kp.scale / sigma - 1.0).abs() < 0.25, "sigma {sigma} scale {}", kp.scale);
    }
}

#[test]
fn detection_is_deterministic() {
    let img = textured(3, 96);
    let a = detect_and_describe(&img, &SiftParams::default()).unwrap();
    let b = detect_and_describe(&img, &SiftParams::default()).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn descriptors_are_unit_norm_and_clamped() {
    let img = textured(1, 128);
    let f = detect_and_describe(&img, &SiftParams::default()).unwrap();
    assert!(f.len() > 20);
    for d in &f.descriptors {
        assert!((d.norm() - 1.0).abs() < 1e-6);
        assert!(d.0.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn identical_patches_give_identical_descriptors() {
    // the same texture pasted twice side by side, far enough apart
    let tex = textured(4, 64);
    let (w, h) = (tex.width, tex.height);
    let img = GrayImage::from_fn(2 * w + 64, h + 64, |x, y| {
        let (x, y) = (x as i64, y as i64 - 32);
        let local = if x >= 16 && x < 16 + w as i64 { x - 16 } else { x - (48 + w as i64) };
        if y >= 0 && y < h as i64 && local >= 0 && local < w as i64 {
            tex.get(local as usize, y as usize)
        } else {
            0.5
        }
    });
    let params = SiftParams { octaves: Some(1), ..SiftParams::default() };
    let ss = build_scale_space(&img, &params).unwrap();
    let kp = Keypoint {
        x: 16.0 + w as f64 / 2.0,
        y: 32.0 + h as f64 / 2.0,
        scale: 1.6 * 2f64.powf(1.0 / 3.0),
        orientation: 0.7,
        response: 0.0,
        octave: 0,
        layer: 1,
        layer_offset: 0.0,
    };
    let twin = Keypoint { x: kp.x + 32.0 + w as f64, ..kp };
    let set = compute_descriptors(&ss, &[kp, twin]);
    assert_eq!(set.descriptors.len(), 2);
    assert!(set.descriptors[0].distance(&set.descriptors[1]) < 1e-6);
}

#[test]
fn descriptors_ignore_uniform_brightness_scaling() {
    let img = textured(5, 96);
    let dim = GrayImage { data: img.data.iter().map(|v| v * 0.7).collect(), ..img.clone() };
    let params = SiftParams::default();
    let ss = build_scale_space(&img, &params).unwrap();
    let kps = assign_orientations(&ss, &detect_keypoints(&ss, &params));
    let a = compute_descriptors(&ss, &kps);
    let ss_dim = build_scale_space(&dim, &params).unwrap();
    let b = compute_descriptors(&ss_dim, &kps);
    assert_eq!(a.descriptors.len(), b.descriptors.len());
    assert!(!a.descriptors.is_empty());
    for (da, db) in a.descriptors.iter().zip(&b.descriptors) {
        for (x, y) in da.0.iter().zip(&db.0) {
            assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
    }
}

#[test]
fn border_keypoints_are_skipped_and_reported() {
    let img = textured(6, 64);
    let params = SiftParams::default();
    let ss = build_scale_space(&img, &params).unwrap();
    let corner = Keypoint {
        x: 0.0,
        y: 0.0,
        scale: 3.0,
        orientation: 0.0,
        response: 0.0,
        octave: 0,
        layer: 1,
        layer_offset: 0.0,
    };
    let center = Keypoint { x: 40.0, y: 32.0, ..corner };
    let set = compute_descriptors(&ss, &[corner, center]);
    assert_eq!(set.skipped, vec![0]);
    assert_eq!(set.keypoints, vec![center]);
}

#[test]
fn rotated_patch_gives_matching_descriptors() {
    // odd side lengths keep the downsampling grids aligned under rotation
    let base = procedural_target(8, 99, 97).pixels.to_gray();
    let img = GrayImage::from_fn(97, 97, |x, y| base.get(x as usize, y as usize));
    let rot = rotate90(&img);
    let params = SiftParams::default();
    let fa = detect_and_describe(&img, &params).unwrap();
    let fb = detect_and_describe(&rot, &params).unwrap();
    let h = img.height as f64;
    let mut compared = 0;
    let mut close = 0;
    for (ka, da) in fa.keypoints.iter().zip(&fa.descriptors) {
        // where the keypoint lands after rotating the image
        let (ex, ey) = (h - 1.0 - ka.y, ka.x);
        let expected_ori = (ka.orientation + core::f64::consts::FRAC_PI_2).rem_euclid(2.0 * core::f64::consts::PI);
        let twin = fb.keypoints.iter().zip(&fb.descriptors).find(|(kb, _)| {
            let dori = (kb.orientation - expected_ori).rem_euclid(2.0 * core::f64::consts::PI);
            (kb.x - ex).abs() < 0.5
                && (kb.y - ey).abs() < 0.5
                && !(0.1..=2.0 * core::f64::consts::PI - 0.1).contains(&dori)
        });
        if let Some((_, db)) = twin {
            compared += 1;
            if da.distance(db) < 0.4 {
                close += 1;
            }
        }
    }
    assert!(compared >= 10, "only {compared} corresponding keypoints");
    assert_eq!(close, compared, "{close}/{compared} under 0.4");
}

#[test]
fn upscaled_image_doubles_keypoint_scales() {
    let img = textured(2, 128);
    let big = upscale2(&img);
    let params = SiftParams::default();
    let fa = detect_and_describe(&img, &params).unwrap();
    let fb = detect_and_describe(&big, &params).unwrap();
    let matches = ratio_filter(&match_knn(&fa.descriptors, &fb.descriptors).unwrap(), 0.8);
    // keep matches that are geometrically consistent with the known 2x map
    let good: Vec<_> = matches
        .iter()
        .filter(|m| {
            let a = fa.keypoints[m.query_index];
            let b = fb.keypoints[m.train_index];
            (b.x - (2.0 * a.x + 0.5)).abs() < 3.0 && (b.y - (2.0 * a.y + 0.5)).abs() < 3.0
        })
        .collect();
    assert!(good.len() >= 20, "only {} consistent matches of {}", good.len(), matches.len());
    let within = good
        .iter()
        .filter(|m| {
            let ratio = fb.keypoints[m.train_index].scale / fa.keypoints[m.query_index].scale;
            (ratio / 2.0 - 1.0).abs() <= 0.2
        })
        .count();
    assert!(within as f64 >= 0.7 * good.len() as f64, "{within}/{}", good.len());
}

fn random_descriptors(n: usize, seed: u64) -> Vec<Descriptor> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut d = [0.0f32; DESCRIPTOR_LEN];
            d.iter_mut().for_each(|v| *v = rng.random::<f32>());
            let n = d.iter().map(|v| v * v).sum::<f32>().sqrt();
            d.iter_mut().for_each(|v| *v /= n);
            Descriptor(d)
        })
        .collect()
}

#[test]
fn knn_agrees_with_brute_force() {
    let q = random_descriptors(100, 1);
    let t = random_descriptors(100, 2);
    let got = match_knn(&q, &t).unwrap();
    for (qi, qd) in q.iter().enumerate() {
        // independent oracle: sort all distances
        let mut all: Vec<(f64, usize)> = t
            .iter()
            .enumerate()
            .map(|(ti, td)| {
                let d: f64 = qd.0.iter().zip(&td.0).map(|(a, b)| ((a - b) as f64).powi(2)).sum();
                (d.sqrt(), ti)
            })
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let m = got[qi];
        assert_eq!(m.query_index, qi);
        assert_eq!(m.train_index, all[0].1);
        assert!((m.distance as f64 - all[0].0).abs() < 1e-5);
        assert!((m.second_distance as f64 - all[1].0).abs() < 1e-5);
    }
}

proptest! {
    #[test]
    fn ratio_filter_is_monotone(
        pairs in prop::collection::vec((0.0f32..2.0, 0.0f32..2.0), 0..60),
        a in 0.05f32..1.0,
        b in 0.05f32..1.0,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let matches: Vec<Match> = pairs
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| Match {
                query_index: i,
                train_index: 0,
                distance: x.min(y),
                second_distance: x.max(y),
            })
            .collect();
        let small = ratio_filter(&matches, lo);
        let large = ratio_filter(&matches, hi);
        prop_assert!(small.iter().all(|m| large.contains(m)));
        // order preserved
        prop_assert!(large.windows(2).all(|w| w[0].query_index < w[1].query_index));
    }
}
