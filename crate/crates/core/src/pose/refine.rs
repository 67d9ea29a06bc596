use nalgebra::{DMatrix, DVector, Matrix6, UnitQuaternion, Vector6};
#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::{Correspondence, PoseError};
use crate::geometry::{CameraIntrinsics, RigidPose, Vec3};

const MAX_ITERATIONS: usize = 100;

/// Outcome of [`refine_pose_lm`]. Costs are sums of squared pixel residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    pub pose: RigidPose,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub iterations: usize,
}

/// Stacked residuals `[u_proj − u_obs, v_proj − v_obs, …]`.
pub fn reprojection_residuals(
    pose: &RigidPose,
    corrs: &[Correspondence],
    k: &CameraIntrinsics,
) -> Result<DVector<f64>, PoseError> {
    let mut r = DVector::zeros(2 * corrs.len());
    for (i, c) in corrs.iter().enumerate() {
        let p = pose.transform_point(&c.object_point);
        let [u, v] = k.project_unchecked(&p);
        r[2 * i] = u - c.image_point[0];
        r[2 * i + 1] = v - c.image_point[1];
    }
    if r.iter().all(|x| x.is_finite()) {
        Ok(r)
    } else {
        Err(PoseError::NonFiniteResidual)
    }
}

/// Jacobian of [`reprojection_residuals`] with respect to the update
/// `(ω, δt)` applied as `R ← exp(ω)·R`, `t ← t + δt`.
pub fn reprojection_jacobian(pose: &RigidPose, corrs: &[Correspondence], k: &CameraIntrinsics) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * corrs.len(), 6);
    for (i, c) in corrs.iter().enumerate() {
        let rx = pose.rotation * c.object_point;
        let p = rx + pose.translation;
        let (x, y, z) = (p.x, p.y, p.z);
        let iz = 1.0 / z;
        // d(u, v) / d(x, y, z)
        let du = [k.fx * iz, k.s * iz, -(k.fx * x + k.s * y) * iz * iz];
        let dv = [0.0, k.fy * iz, -k.fy * y * iz * iz];
        // d p / d ω = −[R X]ₓ
        let skew = [[0.0, rx.z, -rx.y], [-rx.z, 0.0, rx.x], [rx.y, -rx.x, 0.0]];
        for col in 0..3 {
            let mut gu = 0.0;
            let mut gv = 0.0;
            for row in 0..3 {
                gu += du[row] * skew[row][col];
                gv += dv[row] * skew[row][col];
            }
            j[(2 * i, col)] = gu;
            j[(2 * i + 1, col)] = gv;
            j[(2 * i, 3 + col)] = du[col];
            j[(2 * i + 1, 3 + col)] = dv[col];
        }
    }
    j
}

fn cost(pose: &RigidPose, corrs: &[Correspondence], k: &CameraIntrinsics) -> f64 {
    let mut sum = 0.0;
    for c in corrs {
        let p = pose.transform_point(&c.object_point);
        if !(p.z > 0.0) {
            return f64::INFINITY;
        }
        let [u, v] = k.project_unchecked(&p);
        sum += (u - c.image_point[0]).powi(2) + (v - c.image_point[1]).powi(2);
    }
    sum
}

fn apply(pose: &RigidPose, delta: &Vector6<f64>) -> RigidPose {
    let omega = Vec3::new(delta[0], delta[1], delta[2]);
    let dq = UnitQuaternion::from_scaled_axis(omega);
    let mut rotation = dq * pose.rotation;
    rotation.renormalize();
    RigidPose { rotation, translation: pose.translation + Vec3::new(delta[3], delta[4], delta[5]) }
}

/// Levenberg–Marquardt on the summed squared reprojection error over the six
/// pose parameters. Only cost-decreasing steps are accepted, so the final
/// cost never exceeds the initial one.
pub fn refine_pose_lm(
    initial: &RigidPose,
    corrs: &[Correspondence],
    k: &CameraIntrinsics,
) -> Result<Refinement, PoseError> {
    let r0 = reprojection_residuals(initial, corrs, k)?;
    let initial_cost = if corrs.iter().all(|c| initial.transform_point(&c.object_point).z > 0.0) {
        r0.norm_squared()
    } else {
        return Err(PoseError::Cheirality);
    };
    let mut pose = *initial;
    let mut current = initial_cost;
    let mut mu = 1e-3;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && current > 0.0 {
        iterations += 1;
        let r = reprojection_residuals(&pose, corrs, k)?;
        let j = reprojection_jacobian(&pose, corrs, k);
        let jtj: Matrix6<f64> = (j.transpose() * &j).fixed_view::<6, 6>(0, 0).into_owned();
        let g: Vector6<f64> = (j.transpose() * &r).fixed_rows::<6>(0).into_owned();
        if g.amax() < 1e-14 {
            break;
        }
        let mut accepted = false;
        while mu < 1e16 {
            let mut damped = jtj;
            for d in 0..6 {
                damped[(d, d)] += mu * jtj[(d, d)].max(1e-9);
            }
            let Some(step) = damped.cholesky().map(|c| c.solve(&(-g))) else {
                mu *= 10.0;
                continue;
            };
            let candidate = apply(&pose, &step);
            let c = cost(&candidate, corrs, k);
            if c < current {
                let rel = (current - c) / current.max(1e-300);
                pose = candidate;
                current = c;
                mu = (mu / 10.0).max(1e-12);
                accepted = true;
                if rel < 1e-15 || step.amax() < 1e-15 {
                    return Ok(Refinement { pose, initial_cost, final_cost: current, iterations });
                }
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    Ok(Refinement { pose, initial_cost, final_cost: current, iterations })
}
