use std::f64::consts::PI;
use std::sync::OnceLock;

use curvepose_core::geometry::Vec3;
use curvepose_core::pipeline::*;
use curvepose_core::raster::{BBox, RgbImage};
use curvepose_core::synth::{generate_scene, procedural_target, render, SceneDistribution, SceneSample, TargetImage};
use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use proptest::prelude::*;

fn targets() -> &'static [TargetImage] {
    static T: OnceLock<Vec<TargetImage>> = OnceLock::new();
    T.get_or_init(|| (0..20).map(|i| procedural_target(i, 7, 256)).collect())
}

fn library() -> &'static TargetLibrary {
    static L: OnceLock<TargetLibrary> = OnceLock::new();
    L.get_or_init(|| TargetLibrary::build(targets().to_vec(), &PipelineConfig::default().sift).unwrap())
}

fn scene(index: u64) -> SceneSample {
    let sc = generate_scene(targets(), &SceneDistribution::desk_default(), index, 42).unwrap();
    render(&sc, targets(), &[]).unwrap()
}

fn rz(theta: f64) -> Quaternion<f64> {
    *UnitQuaternion::from_axis_angle(&Vector3::z_axis(), theta).quaternion()
}

#[test]
fn rotation_error_identities() {
    let q = *UnitQuaternion::from_euler_angles(0.3, -1.1, 2.0).quaternion();
    assert_eq!(rotation_error(&q, &q).unwrap(), 0.0);
    assert!(rotation_error(&q, &-q).unwrap() < 1e-7);
    for theta in [0.1, 0.5, 1.0, PI - 0.1] {
        let e = rotation_error(&Quaternion::identity(), &rz(theta)).unwrap();
        assert!((e - theta).abs() < 1e-9, "{theta}: {e}");
    }
    let e = rotation_error(&Quaternion::identity(), &rz(PI / 2.0)).unwrap();
    assert!((e - PI / 2.0).abs() < 1e-12);
}

#[test]
fn rotation_error_rejects_non_unit() {
    let bad = Quaternion::new(1.0, 0.0, 0.0, 1e-2);
    assert!(matches!(rotation_error(&bad, &Quaternion::identity()), Err(PipelineError::NonUnitQuaternion(_))));
    assert!(rotation_error(&Quaternion::identity(), &(Quaternion::identity() * 2.0)).is_err());
}

#[test]
fn distance_metrics() {
    assert_eq!(translation_error(&Vec3::new(3.0, 4.0, 0.0), &Vec3::zeros()), 5.0);
    assert_eq!(translation_error(&Vec3::new(1.0, 2.0, 3.0), &Vec3::new(1.0, 2.0, 3.0)), 0.0);
    assert!((diameter_error(1.64, 1.5) - 0.14).abs() < 1e-12);
    assert_eq!(diameter_error(1.5, 1.5), 0.0);
}

#[test]
fn iou_examples() {
    let a = BBox::new(0.0, 0.0, 1.0, 1.0);
    assert_eq!(iou(&a, &a), 1.0);
    assert_eq!(iou(&a, &BBox::new(5.0, 5.0, 1.0, 1.0)), 0.0);
    assert!((iou(&a, &BBox::new(0.5, 0.0, 1.0, 1.0)) - 1.0 / 3.0).abs() < 1e-12);
}

fn row(sample: usize, iou: Option<f64>, time_s: f64, d: Option<f64>) -> EvalRecord {
    EvalRecord {
        sample,
        success: iou.is_some_and(|v| v >= SUCCESS_IOU),
        iou,
        time_s: Some(time_s),
        diameter_err: d,
        rotation_err: d.map(|v| v * 2.0),
        translation_err: d.map(|v| v * 3.0),
    }
}

fn ten_rows() -> Vec<EvalRecord> {
    let iou =
        [Some(0.91), Some(0.75), None, Some(0.42), Some(0.88), Some(0.67), None, Some(0.95), Some(0.81), Some(0.58)];
    let time = [0.031, 0.044, 0.012, 0.038, 0.029, 0.051, 0.010, 0.047, 0.036, 0.040];
    let dia = [Some(0.05), Some(0.12), None, None, Some(0.02), Some(0.30), None, Some(0.08), Some(0.11), None];
    (0..10).map(|i| row(i, iou[i], time[i], dia[i])).collect()
}

#[test]
fn summary_matches_recomputation() {
    // mean / population std recomputed independently (Python statistics)
    let s = summarize(&ten_rows());
    assert_eq!(s.samples, 10);
    assert!((s.success_rate - 0.7).abs() < 1e-15);
    let close = |c: ColumnSummary, n: usize, mean: f64, std: f64| {
        assert_eq!(c.count, n);
        assert!((c.mean.unwrap() - mean).abs() < 1e-12, "{c:?}");
        assert!((c.std.unwrap() - std).abs() < 1e-12, "{c:?}");
    };
    close(s.iou, 8, 0.74625, 0.16962734891520295);
    close(s.time_s, 10, 0.0338, 0.013067516979135706);
    close(s.diameter_err, 6, 0.11333333333333333, 0.09012337223063849);
}

#[test]
fn all_failed_rows_summarize_to_empty_cells() {
    let rows: Vec<EvalRecord> = (0..4).map(|i| EvalRecord { time_s: None, ..row(i, None, 0.01, None) }).collect();
    let s = summarize(&rows);
    assert_eq!(s.success_rate, 0.0);
    for c in [s.iou, s.time_s, s.diameter_err, s.rotation_err, s.translation_err] {
        assert_eq!(c, ColumnSummary { count: 0, mean: None, std: None });
    }
}

#[test]
fn ablation_names_round_trip() {
    for a in [Ablation::Full, Ablation::GtBBox, Ablation::GtAll] {
        assert_eq!(Ablation::parse(a.name()), Some(a));
    }
    assert_eq!(Ablation::parse("yolo"), None);
}

#[test]
fn blank_image_is_not_detected() {
    let img = RgbImage::filled(320, 240, [128, 128, 128]);
    let err = detect_and_classify(&img, library(), &PipelineConfig::default(), None).unwrap_err();
    assert!(err.is_no_detection(), "{err}");
    assert!(matches!(err, PipelineError::NoDetection { best: 0, .. }));
}

#[test]
fn empty_library_is_rejected() {
    assert_eq!(TargetLibrary::build(vec![], &Default::default()).unwrap_err(), PipelineError::EmptyLibrary);
    let gap = vec![procedural_target(0, 1, 64), procedural_target(2, 1, 64)];
    assert_eq!(TargetLibrary::build(gap, &Default::default()).unwrap_err(), PipelineError::TargetIds(2));
}

#[test]
fn classifies_target_seven_of_twenty() {
    let s = scene(7);
    assert_eq!(s.truth.target_id, 7);
    let d = detect_and_classify(&s.image, library(), &PipelineConfig::default(), None).unwrap();
    assert_eq!(d.target_id, 7);
    assert!(d.score >= 8);
    assert!(iou(&d.bbox, &s.truth.bbox) >= SUCCESS_IOU);
    assert!(d.bbox.x >= -0.5 && d.bbox.right() <= s.image.width as f64 - 0.5);
}

#[test]
fn ground_truth_box_passes_through() {
    let s = scene(3);
    let cfg = PipelineConfig::default();
    let d = detect_and_classify(&s.image, library(), &cfg, Some(&s.truth.bbox)).unwrap();
    assert_eq!(d.bbox, s.truth.bbox);
    assert_eq!(d.target_id, s.truth.target_id);

    // downstream pose is the same as with a directly injected detection
    let k = s.truth.intrinsics;
    let dia = DiameterSource::Fixed(s.truth.diameter);
    let a = estimate(&s.image, &d, library(), dia, &k, &cfg).unwrap();
    let b = estimate(&s.image, &Detection::from_ground_truth(&s.truth), library(), dia, &k, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn ground_truth_injection_recovers_pose() {
    let cfg = PipelineConfig::default();
    for index in [0, 11, 25] {
        let s = scene(index);
        let k = s.truth.intrinsics;
        let det = Detection::from_ground_truth(&s.truth);
        let e = estimate(&s.image, &det, library(), DiameterSource::Fixed(s.truth.diameter), &k, &cfg).unwrap();
        let rec = score_sample(index as usize, &s.truth, Some(&det), Some(&e), Some(0.0));
        assert!(rec.success);
        assert_eq!(rec.iou, Some(1.0));
        assert_eq!(rec.diameter_err, Some(0.0));
        assert!(rec.rotation_err.unwrap() < 0.15, "{rec:?}");
        assert!(rec.translation_err.unwrap() < 0.05 * s.truth.pose().translation.norm(), "{rec:?}");
        assert!(e.inliers >= 8 && e.reprojection_error <= cfg.ransac.inlier_threshold);
    }
}

#[test]
fn estimate_is_deterministic() {
    let s = scene(5);
    let cfg = PipelineConfig::default();
    let det = Detection::from_ground_truth(&s.truth);
    let run = || estimate(&s.image, &det, library(), DiameterSource::Fixed(1.9), &s.truth.intrinsics, &cfg);
    assert_eq!(run().unwrap(), run().unwrap());
}

#[test]
fn featureless_region_has_too_few_matches() {
    let s = scene(2);
    let blank = RgbImage::filled(s.image.width, s.image.height, [90, 90, 90]);
    let det = Detection::from_ground_truth(&s.truth);
    let err =
        estimate(&blank, &det, library(), DiameterSource::Fixed(2.0), &s.truth.intrinsics, &PipelineConfig::default())
            .unwrap_err();
    assert!(matches!(err, PipelineError::TooFewMatches { .. }), "{err}");
    assert!(!err.is_no_detection());
}

#[test]
fn failed_stages_leave_cells_empty() {
    let s = scene(1);
    let rec = score_sample(1, &s.truth, None, None, None);
    assert!(!rec.success);
    assert_eq!((rec.iou, rec.diameter_err, rec.rotation_err, rec.translation_err), (None, None, None, None));
    let far = Detection { target_id: s.truth.target_id, bbox: BBox::new(0.0, 0.0, 10.0, 10.0), score: 9 };
    let rec = score_sample(1, &s.truth, Some(&far), None, None);
    assert!(!rec.success);
    assert!(rec.iou.unwrap() < SUCCESS_IOU);
}

fn unit_quaternion() -> impl Strategy<Value = Quaternion<f64>> {
    (-PI..PI, -PI..PI, -PI..PI).prop_map(|(a, b, c)| *UnitQuaternion::from_euler_angles(a, b, c).quaternion())
}

proptest! {
    #[test]
    fn rotation_error_is_symmetric_and_bounded(a in unit_quaternion(), b in unit_quaternion()) {
        let ab = rotation_error(&a, &b).unwrap();
        let ba = rotation_error(&b, &a).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=PI).contains(&ab));
        prop_assert_eq!(rotation_error(&a, &-b).unwrap(), ab);
    }

    #[test]
    fn iou_is_symmetric_and_in_unit_range(
        a in (0.0..100.0, 0.0..100.0, 0.1..50.0, 0.1..50.0),
        b in (0.0..100.0, 0.0..100.0, 0.1..50.0, 0.1..50.0),
    ) {
        let a = BBox::new(a.0, a.1, a.2, a.3);
        let b = BBox::new(b.0, b.1, b.2, b.3);
        let v = iou(&a, &b);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(v, iou(&b, &a));
    }

    #[test]
    fn summary_is_invariant_under_permutation(order in Just((0..10).collect::<Vec<usize>>()).prop_shuffle()) {
        let rows = ten_rows();
        let shuffled: Vec<EvalRecord> = order.iter().map(|&i| rows[i]).collect();
        prop_assert_eq!(summarize(&shuffled), summarize(&rows));
    }
}
