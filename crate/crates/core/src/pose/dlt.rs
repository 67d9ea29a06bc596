use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use nalgebra::{DMatrix, Matrix3, Matrix3x4, Matrix4, Vector2, Vector3};

use super::{Correspondence, PoseError, MIN_POINTS};
use crate::geometry::{CameraIntrinsics, RigidPose, Vec3};

const RANK_TOL: f64 = 1e-9;
const PLANAR_TOL: f64 = 1e-6;

/// Linear pose from ≥ 6 correspondences. The 3×4 projection (in normalized
/// camera coordinates) is solved by SVD after Hartley normalization, then
/// split into the nearest rotation and a translation. Coplanar object points
/// go through a homography instead.
pub fn pnp_dlt(corrs: &[Correspondence], k: &CameraIntrinsics) -> Result<RigidPose, PoseError> {
    if corrs.len() < MIN_POINTS {
        return Err(PoseError::TooFewPoints { needed: MIN_POINTS, got: corrs.len() });
    }
    let kinv = k.matrix().try_inverse().ok_or(PoseError::RankDeficient("singular intrinsics"))?;
    let img: Vec<Vector2<f64>> = corrs
        .iter()
        .map(|c| {
            let m = kinv * Vector3::new(c.image_point[0], c.image_point[1], 1.0);
            Vector2::new(m.x / m.z, m.y / m.z)
        })
        .collect();
    let obj: Vec<Vec3> = corrs.iter().map(|c| c.object_point).collect();

    let (img_c, img_spread) = spread_2d(&img);
    if img_spread[1] <= RANK_TOL * img_spread[0] || img_spread[0] <= 0.0 {
        return Err(PoseError::RankDeficient("image points are collinear"));
    }
    let (obj_c, axes, obj_spread) = spread_3d(&obj);
    if obj_spread[1] <= RANK_TOL * obj_spread[0] || obj_spread[0] <= 0.0 {
        return Err(PoseError::RankDeficient("object points are collinear"));
    }

    let pose = if obj_spread[2] <= PLANAR_TOL * obj_spread[0] {
        planar_pose(&obj, &img, &obj_c, &axes)?
    } else {
        general_pose(&obj, &img, &obj_c, &img_c)?
    };

    let in_front = obj.iter().filter(|p| pose.transform_point(p).z > 0.0).count();
    if 2 * in_front < obj.len() {
        return Err(PoseError::Cheirality);
    }
    Ok(pose)
}

/// Centroid and sorted singular values of the centered 2D points.
fn spread_2d(pts: &[Vector2<f64>]) -> (Vector2<f64>, [f64; 2]) {
    let n = pts.len() as f64;
    let c = pts.iter().sum::<Vector2<f64>>() / n;
    let mut cov = nalgebra::Matrix2::zeros();
    for p in pts {
        let d = p - c;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigenvalues();
    let (a, b) = (eig[0].max(eig[1]), eig[0].min(eig[1]));
    (c, [a.max(0.0).sqrt(), b.max(0.0).sqrt()])
}

/// Centroid, principal axes (columns, by decreasing spread) and spreads.
fn spread_3d(pts: &[Vec3]) -> (Vec3, Matrix3<f64>, [f64; 3]) {
    let n = pts.len() as f64;
    let c = pts.iter().sum::<Vec3>() / n;
    let mut cov = Matrix3::zeros();
    for p in pts {
        let d = p - c;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap_or(core::cmp::Ordering::Equal));
    let axes = Matrix3::from_columns(&[
        eig.eigenvectors.column(order[0]).into_owned(),
        eig.eigenvectors.column(order[1]).into_owned(),
        eig.eigenvectors.column(order[2]).into_owned(),
    ]);
    let s = order.map(|i| eig.eigenvalues[i].max(0.0).sqrt());
    (c, axes, s)
}

fn general_pose(
    obj: &[Vec3],
    img: &[Vector2<f64>],
    obj_c: &Vec3,
    img_c: &Vector2<f64>,
) -> Result<RigidPose, PoseError> {
    let n = obj.len();
    let s3 = 3f64.sqrt() / (obj.iter().map(|p| (p - obj_c).norm()).sum::<f64>() / n as f64);
    let s2 = core::f64::consts::SQRT_2 / (img.iter().map(|p| (p - img_c).norm()).sum::<f64>() / n as f64);
    let t3 = Matrix4::new(
        s3,
        0.0,
        0.0,
        -s3 * obj_c.x,
        0.0,
        s3,
        0.0,
        -s3 * obj_c.y,
        0.0,
        0.0,
        s3,
        -s3 * obj_c.z,
        0.0,
        0.0,
        0.0,
        1.0,
    );
    let t2 = Matrix3::new(s2, 0.0, -s2 * img_c.x, 0.0, s2, -s2 * img_c.y, 0.0, 0.0, 1.0);

    let mut a = DMatrix::<f64>::zeros(2 * n, 12);
    for (i, (p, m)) in obj.iter().zip(img).enumerate() {
        let x = [s3 * (p.x - obj_c.x), s3 * (p.y - obj_c.y), s3 * (p.z - obj_c.z), 1.0];
        let u = s2 * (m.x - img_c.x);
        let v = s2 * (m.y - img_c.y);
        for j in 0..4 {
            a[(2 * i, j)] = x[j];
            a[(2 * i, 8 + j)] = -u * x[j];
            a[(2 * i + 1, 4 + j)] = x[j];
            a[(2 * i + 1, 8 + j)] = -v * x[j];
        }
    }
    let h = null_vector(a, 12)?;
    let pn = Matrix3x4::from_row_slice(h.as_slice());
    let t2_inv = t2.try_inverse().ok_or(PoseError::RankDeficient("normalization"))?;
    let mut p = t2_inv * pn * t3;

    let mut m = p.fixed_view::<3, 3>(0, 0).into_owned();
    if m.determinant() < 0.0 {
        p = -p;
        m = -m;
    }
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let r = u * vt;
    let scale = svd.singular_values.sum() / 3.0;
    if !(scale > 0.0) {
        return Err(PoseError::RankDeficient("zero projection scale"));
    }
    let t = p.column(3) / scale;
    Ok(RigidPose::from_matrix(&r, t.into_owned()))
}

fn planar_pose(obj: &[Vec3], img: &[Vector2<f64>], obj_c: &Vec3, axes: &Matrix3<f64>) -> Result<RigidPose, PoseError> {
    // right-handed plane frame: e1, e2 in the plane, e3 normal
    let e1 = axes.column(0).into_owned();
    let e2 = axes.column(1).into_owned();
    let e3 = e1.cross(&e2);
    let rp = Matrix3::from_columns(&[e1, e2, e3]);
    let plane: Vec<Vector2<f64>> = obj
        .iter()
        .map(|p| {
            let d = p - obj_c;
            Vector2::new(d.dot(&e1), d.dot(&e2))
        })
        .collect();
    let (pc, _) = spread_2d(&plane);
    let (ic, _) = spread_2d(img);
    let n = obj.len() as f64;
    let sp = core::f64::consts::SQRT_2 / (plane.iter().map(|p| (p - pc).norm()).sum::<f64>() / n);
    let si = core::f64::consts::SQRT_2 / (img.iter().map(|p| (p - ic).norm()).sum::<f64>() / n);
    let tp = Matrix3::new(sp, 0.0, -sp * pc.x, 0.0, sp, -sp * pc.y, 0.0, 0.0, 1.0);
    let ti = Matrix3::new(si, 0.0, -si * ic.x, 0.0, si, -si * ic.y, 0.0, 0.0, 1.0);

    let mut a = DMatrix::<f64>::zeros(2 * obj.len(), 9);
    for (i, (p, m)) in plane.iter().zip(img).enumerate() {
        let x = [sp * (p.x - pc.x), sp * (p.y - pc.y), 1.0];
        let u = si * (m.x - ic.x);
        let v = si * (m.y - ic.y);
        for j in 0..3 {
            a[(2 * i, j)] = x[j];
            a[(2 * i, 6 + j)] = -u * x[j];
            a[(2 * i + 1, 3 + j)] = x[j];
            a[(2 * i + 1, 6 + j)] = -v * x[j];
        }
    }
    let h = null_vector(a, 9)?;
    let hn = Matrix3::from_row_slice(h.as_slice());
    let ti_inv = ti.try_inverse().ok_or(PoseError::RankDeficient("normalization"))?;
    let hm = ti_inv * hn * tp;

    let (h1, h2, h3) = (hm.column(0).into_owned(), hm.column(1).into_owned(), hm.column(2).into_owned());
    let mut lambda = 2.0 / (h1.norm() + h2.norm());
    if (h3 * lambda).z < 0.0 {
        lambda = -lambda;
    }
    let r1 = h1 * lambda;
    let r2 = h2 * lambda;
    let r3 = r1.cross(&r2);
    let approx = Matrix3::from_columns(&[r1, r2, r3]);
    let svd = approx.svd(true, true);
    let mut rcp = svd.u.unwrap() * svd.v_t.unwrap();
    if rcp.determinant() < 0.0 {
        rcp = -rcp;
    }
    let tcp = h3 * lambda;
    let r = rcp * rp.transpose();
    let t = tcp - r * obj_c;
    Ok(RigidPose::from_matrix(&r, t))
}

/// Right singular vector of the smallest singular value; errors when the
/// null space is more than one-dimensional.
fn null_vector(a: DMatrix<f64>, cols: usize) -> Result<nalgebra::DVector<f64>, PoseError> {
    // pad to at least square so V is complete
    let a = if a.nrows() < cols {
        let mut padded = DMatrix::zeros(cols, cols);
        padded.view_mut((0, 0), (a.nrows(), cols)).copy_from(&a);
        padded
    } else {
        a
    };
    let svd = a.svd(false, true);
    let vt = svd.v_t.ok_or(PoseError::RankDeficient("svd failed"))?;
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap_or(core::cmp::Ordering::Equal));
    let largest = sv[order[0]];
    let second_smallest = sv[order[cols - 2]];
    if !(largest > 0.0) || second_smallest <= RANK_TOL * largest {
        return Err(PoseError::RankDeficient("linear system has a multi-dimensional null space"));
    }
    Ok(vt.row(order[cols - 1]).transpose())
}
