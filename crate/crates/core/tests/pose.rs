use curvepose_core::geometry::{
    euler_to_quaternion, label_to_cylinder, CameraIntrinsics, CylinderModel, LabelPoint, RigidPose, Vec3,
};
use curvepose_core::pose::*;
use nalgebra::UnitQuaternion;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn camera() -> CameraIntrinsics {
    CameraIntrinsics::scaled_reference(640, 480)
}

fn rotation_error(a: &RigidPose, b: &RigidPose) -> f64 {
    a.rotation.angle_to(&b.rotation)
}

fn translation_error(a: &RigidPose, b: &RigidPose) -> f64 {
    (a.translation - b.translation).norm()
}

fn random_pose(rng: &mut ChaCha8Rng) -> RigidPose {
    // base orientation: cylinder axis up in the image, label facing the camera
    let a = core::f64::consts::FRAC_PI_2 + rng.random_range(-0.5..0.5);
    let q = euler_to_quaternion([a, rng.random_range(-0.6..0.6), rng.random_range(-0.4..0.4)]);
    let t = Vec3::new(rng.random_range(-0.4..0.4), rng.random_range(-0.3..0.3), rng.random_range(3.5..6.0));
    RigidPose::new(q, t)
}

/// Points on the visible label of a random cylinder and their exact pixels.
fn cylinder_scene(rng: &mut ChaCha8Rng, n: usize) -> (RigidPose, Vec<Correspondence>) {
    let k = camera();
    loop {
        let cyl = CylinderModel::new(rng.random_range(1.0..2.0), rng.random_range(1.0..1.5)).unwrap();
        let pose = random_pose(rng);
        let corrs: Vec<Correspondence> = (0..n)
            .map(|_| {
                let lp = LabelPoint { u: rng.random_range(0.0..cyl.label_width), v: rng.random_range(0.0..1.0) };
                let x = label_to_cylinder(lp, &cyl).unwrap();
                let p = pose.transform_point(&x);
                Correspondence::new(x, k.project(&p).unwrap())
            })
            .collect();
        let inside = corrs.iter().all(|c| {
            let [u, v] = c.image_point;
            u >= 0.0 && v >= 0.0 && u < 640.0 && v < 480.0
        });
        if inside {
            return (pose, corrs);
        }
    }
}

#[test]
fn dlt_recovers_exact_pose() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let (truth, corrs) = cylinder_scene(&mut rng, 30);
        let est = pnp_dlt(&corrs, &camera()).unwrap();
        assert!(rotation_error(&est, &truth) < 1e-6);
        assert!(translation_error(&est, &truth) < 1e-6);
    }
}

#[test]
fn dlt_recovers_exact_pose_from_minimal_sample() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (truth, corrs) = cylinder_scene(&mut rng, 6);
    let est = pnp_dlt(&corrs, &camera()).unwrap();
    assert!(rotation_error(&est, &truth) < 1e-6);
    assert!(translation_error(&est, &truth) < 1e-6);
}

#[test]
fn dlt_handles_coplanar_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let truth = random_pose(&mut rng);
    let k = camera();
    let corrs: Vec<Correspondence> = (0..20)
        .map(|_| {
            let x = Vec3::new(rng.random_range(-0.6..0.6), -0.7, rng.random_range(-0.5..0.5));
            Correspondence::new(x, k.project(&truth.transform_point(&x)).unwrap())
        })
        .collect();
    let est = pnp_dlt(&corrs, &k).unwrap();
    assert!(rotation_error(&est, &truth) < 1e-6, "{}", rotation_error(&est, &truth));
    assert!(translation_error(&est, &truth) < 1e-6);
}

#[test]
fn dlt_rejects_five_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (_, corrs) = cylinder_scene(&mut rng, 5);
    assert_eq!(pnp_dlt(&corrs, &camera()), Err(PoseError::TooFewPoints { needed: 6, got: 5 }));
}

#[test]
fn dlt_rejects_collinear_image_points() {
    let corrs: Vec<Correspondence> = (0..10)
        .map(|i| {
            let f = i as f64;
            Correspondence::new(
                Vec3::new(f * 0.1, (f * 0.7).sin(), 0.3 * f * f / 10.0),
                [100.0 + 10.0 * f, 50.0 + 5.0 * f],
            )
        })
        .collect();
    assert!(matches!(pnp_dlt(&corrs, &camera()), Err(PoseError::RankDeficient(_))));
}

#[test]
fn lm_leaves_optimum_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (truth, corrs) = cylinder_scene(&mut rng, 40);
    let r = refine_pose_lm(&truth, &corrs, &camera()).unwrap();
    assert!(rotation_error(&r.pose, &truth) < 1e-9);
    assert!(translation_error(&r.pose, &truth) < 1e-9);
    assert!(r.final_cost <= r.initial_cost);
}

#[test]
fn lm_recovers_perturbed_pose() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10 {
        let (truth, corrs) = cylinder_scene(&mut rng, 40);
        let axis = nalgebra::Unit::new_normalize(Vec3::new(rng.random(), rng.random(), rng.random::<f64>() + 0.1));
        let dir =
            Vec3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5).normalize();
        let start = RigidPose::new(
            UnitQuaternion::from_axis_angle(&axis, 0.05) * truth.rotation,
            truth.translation + dir * 0.05,
        );
        let r = refine_pose_lm(&start, &corrs, &camera()).unwrap();
        assert!(rotation_error(&r.pose, &truth) < 1e-6);
        assert!(translation_error(&r.pose, &truth) < 1e-6);
        assert!(r.final_cost <= r.initial_cost);
        assert!((r.pose.rotation.quaternion().norm() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn lm_rejects_non_finite_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (truth, mut corrs) = cylinder_scene(&mut rng, 10);
    corrs[3].image_point[0] = f64::NAN;
    assert_eq!(refine_pose_lm(&truth, &corrs, &camera()).unwrap_err(), PoseError::NonFiniteResidual);
}

#[test]
fn jacobian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let k = camera();
    let h = 1e-6;
    let mut checked = 0;
    for _ in 0..25 {
        let (truth, corrs) = cylinder_scene(&mut rng, 8);
        // evaluate away from the optimum so residuals are non-zero
        let pose = RigidPose::new(
            UnitQuaternion::from_scaled_axis(Vec3::new(0.02, -0.03, 0.01)) * truth.rotation,
            truth.translation + Vec3::new(0.03, -0.02, 0.05),
        );
        let j = reprojection_jacobian(&pose, &corrs, &k);
        for p in 0..6 {
            let mut d = [0.0; 6];
            d[p] = h;
            let shift = |s: f64| {
                let omega = Vec3::new(d[0], d[1], d[2]) * s;
                let dt = Vec3::new(d[3], d[4], d[5]) * s;
                RigidPose::new(UnitQuaternion::from_scaled_axis(omega) * pose.rotation, pose.translation + dt)
            };
            let rp = reprojection_residuals(&shift(1.0), &corrs, &k).unwrap();
            let rm = reprojection_residuals(&shift(-1.0), &corrs, &k).unwrap();
            let numeric = (rp - rm) / (2.0 * h);
            let analytic = j.column(p);
            let rel = (&numeric - analytic).norm() / numeric.norm().max(analytic.norm()).max(1e-12);
            assert!(rel <= 1e-4, "param {p}: rel err {rel}");
            checked += 1;
        }
    }
    assert!(checked >= 20);
}

#[test]
fn ransac_exact_data_keeps_all_inliers() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (truth, corrs) = cylinder_scene(&mut rng, 100);
    let est = ransac_pnp(&corrs, &camera(), &RansacParams::default(), &mut rng).unwrap();
    assert_eq!(est.inlier_indices, (0..100).collect::<Vec<_>>());
    assert!(rotation_error(&est.pose, &truth) < 1e-6);
    assert!(translation_error(&est.pose, &truth) < 1e-6);
    assert!(est.mean_reprojection_error < 1e-6);
}

fn with_outliers(rng: &mut ChaCha8Rng, inliers: usize, outliers: usize) -> (RigidPose, Vec<Correspondence>) {
    let (truth, mut corrs) = cylinder_scene(rng, inliers + outliers);
    let k = camera();
    for c in corrs.iter_mut().skip(inliers) {
        // uniform pixels, regenerated until clearly off the true projection
        loop {
            let px = [rng.random_range(0.0..640.0), rng.random_range(0.0..480.0)];
            let [u, v] = k.project(&truth.transform_point(&c.object_point)).unwrap();
            if ((px[0] - u).powi(2) + (px[1] - v).powi(2)).sqrt() > 10.0 {
                c.image_point = px;
                break;
            }
        }
    }
    (truth, corrs)
}

#[test]
fn ransac_excludes_planted_outliers() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (truth, corrs) = with_outliers(&mut rng, 70, 30);
    let est = ransac_pnp(&corrs, &camera(), &RansacParams::default(), &mut rng).unwrap();
    assert!(rotation_error(&est.pose, &truth) < 1e-3);
    assert!(est.inlier_indices.iter().all(|&i| i < 70));
    assert!(est.mean_reprojection_error <= 2.0);
}

#[test]
fn ransac_reports_insufficient_consensus() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (_, corrs) = with_outliers(&mut rng, 50, 50);
    let params = RansacParams { min_inliers: Some(60), ..RansacParams::default() };
    match ransac_pnp(&corrs, &camera(), &params, &mut rng) {
        Err(PoseError::NoPose { found, required }) => {
            assert_eq!(required, 60);
            assert!(found < 60);
        }
        other => panic!("expected no-pose error, got {other:?}"),
    }
}

#[test]
fn ransac_is_deterministic_for_a_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (_, corrs) = with_outliers(&mut rng, 60, 20);
    let run =
        |seed| ransac_pnp(&corrs, &camera(), &RansacParams::default(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    assert_eq!(run(5), run(5));
}

#[test]
fn default_min_inliers_rule() {
    let p = RansacParams::default();
    assert_eq!(p.required_inliers(10), 8);
    assert_eq!(p.required_inliers(53), 8);
    assert_eq!(p.required_inliers(54), 9);
    assert_eq!(p.required_inliers(100), 15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ransac_is_permutation_invariant(scene_seed in 0u64..1000, perm_seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(scene_seed);
        let (_, corrs) = with_outliers(&mut rng, 40, 10);
        let k = camera();
        let a = ransac_pnp(&corrs, &k, &RansacParams::default(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let mut order: Vec<usize> = (0..corrs.len()).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
        let shuffled: Vec<Correspondence> = order.iter().map(|&i| corrs[i]).collect();
        let b = ransac_pnp(&shuffled, &k, &RansacParams::default(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        prop_assert!(rotation_error(&a.pose, &b.pose) < 1e-6);
        prop_assert!(translation_error(&a.pose, &b.pose) < 1e-6);
        let mut mapped: Vec<usize> = b.inlier_indices.iter().map(|&i| order[i]).collect();
        mapped.sort_unstable();
        prop_assert_eq!(mapped, a.inlier_indices);
    }

    #[test]
    fn lm_never_increases_cost(seed in 0u64..10_000, noise in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (truth, mut corrs) = cylinder_scene(&mut rng, 20);
        for c in &mut corrs {
            c.image_point[0] += rng.random_range(-noise..=noise);
            c.image_point[1] += rng.random_range(-noise..=noise);
        }
        let start = RigidPose::new(
            UnitQuaternion::from_scaled_axis(Vec3::new(0.03, 0.02, -0.04)) * truth.rotation,
            truth.translation + Vec3::new(0.02, 0.05, -0.1),
        );
        let r = refine_pose_lm(&start, &corrs, &camera()).unwrap();
        prop_assert!(r.final_cost <= r.initial_cost);
        prop_assert!((r.pose.rotation.quaternion().norm() - 1.0).abs() < 1e-9);
    }
}
