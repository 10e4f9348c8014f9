//! Perspective-n-point pose estimation: DLT initialization refined by
//! Levenberg-Marquardt on the pixel reprojection error.

use nalgebra::{DMatrix, Matrix3, Matrix6, Rotation3, Vector2, Vector3, Vector6};

use crate::camera::{rotated_point_jacobian, Intrinsics, Pose};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct PnpSolution {
    pub pose: Pose,
    pub mean_reproj_px: f64,
}

/// Estimates the model-to-camera pose from 2D-3D correspondences.
/// Points marked invalid must be filtered out by the caller.
pub fn pnp_pose(points2d: &[Vector2<f64>], points3d: &[Vector3<f64>], intr: &Intrinsics) -> Result<PnpSolution> {
    let n = points2d.len();
    if n != points3d.len() {
        return Err(Error::DimMismatch("pnp correspondence counts".into()));
    }
    if n < 4 {
        return Err(Error::Pnp("need at least 4 correspondences"));
    }
    let init = if n >= 6 {
        dlt_pose(points2d, points3d, intr)?
    } else {
        heuristic_pose(points2d, points3d, intr)
    };
    let (pose, mean_reproj_px) = lm_refine(init, points2d, points3d, intr)?;
    Ok(PnpSolution { pose, mean_reproj_px })
}

fn normalized(points2d: &[Vector2<f64>], intr: &Intrinsics) -> Vec<Vector2<f64>> {
    points2d
        .iter()
        .map(|p| Vector2::new((p.x - intr.cx) / intr.fx, (p.y - intr.cy) / intr.fy))
        .collect()
}

fn dlt_pose(points2d: &[Vector2<f64>], points3d: &[Vector3<f64>], intr: &Intrinsics) -> Result<Pose> {
    let n = points2d.len();
    let norm = normalized(points2d, intr);
    let mut a = DMatrix::<f64>::zeros(2 * n, 12);
    for i in 0..n {
        let p = points3d[i];
        let (x, y) = (norm[i].x, norm[i].y);
        let r0 = 2 * i;
        a[(r0, 0)] = p.x;
        a[(r0, 1)] = p.y;
        a[(r0, 2)] = p.z;
        a[(r0, 3)] = 1.0;
        a[(r0, 8)] = -x * p.x;
        a[(r0, 9)] = -x * p.y;
        a[(r0, 10)] = -x * p.z;
        a[(r0, 11)] = -x;
        let r1 = r0 + 1;
        a[(r1, 4)] = p.x;
        a[(r1, 5)] = p.y;
        a[(r1, 6)] = p.z;
        a[(r1, 7)] = 1.0;
        a[(r1, 8)] = -y * p.x;
        a[(r1, 9)] = -y * p.y;
        a[(r1, 10)] = -y * p.z;
        a[(r1, 11)] = -y;
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.as_ref().unwrap();
    let sv = &svd.singular_values;
    // A second near-zero singular value means the solution direction is
    // not unique; classic for coplanar point sets.
    if sv[10] <= 1e-9 * sv[0].max(1e-300) {
        return Err(Error::Pnp("degenerate configuration (coplanar or near-singular)"));
    }
    let p_vec = vt.row(11);
    let mut m = Matrix3::zeros();
    let mut t = Vector3::zeros();
    for r in 0..3 {
        for c in 0..3 {
            m[(r, c)] = p_vec[4 * r + c];
        }
        t[r] = p_vec[4 * r + 3];
    }
    // Pick the sign that puts the points in front of the camera.
    let mut z_sum = 0.0;
    for p in points3d {
        z_sum += (m * p + t).z;
    }
    if z_sum < 0.0 {
        m = -m;
        t = -t;
    }
    // Polar decomposition: M ≈ s R.
    let svd3 = m.svd(true, true);
    let u = svd3.u.unwrap();
    let vt3 = svd3.v_t.unwrap();
    let scale = svd3.singular_values.mean();
    if scale <= 1e-12 {
        return Err(Error::Pnp("degenerate configuration (coplanar or near-singular)"));
    }
    let mut d = Matrix3::identity();
    d[(2, 2)] = (u * vt3).determinant().signum();
    let r = u * d * vt3;
    let rot = Rotation3::from_matrix_unchecked(r);
    Ok(Pose::from_parts(&rot, t / scale))
}

/// Coarse initialization for 4-5 points: identity rotation with the
/// depth set from the 3D/2D spread ratio.
fn heuristic_pose(points2d: &[Vector2<f64>], points3d: &[Vector3<f64>], intr: &Intrinsics) -> Pose {
    let n = points3d.len() as f64;
    let norm = normalized(points2d, intr);
    let c3: Vector3<f64> = points3d.iter().sum::<Vector3<f64>>() / n;
    let c2: Vector2<f64> = norm.iter().sum::<Vector2<f64>>() / n;
    let spread3: f64 = points3d.iter().map(|p| (p - c3).xy().norm()).sum::<f64>() / n;
    let spread2: f64 = norm.iter().map(|p| (p - c2).norm()).sum::<f64>() / n;
    let z0 = if spread2 > 1e-9 { (spread3 / spread2).max(1.0) } else { 1000.0 };
    Pose::new(
        Vector3::zeros(),
        Vector3::new(c2.x * z0 - c3.x, c2.y * z0 - c3.y, z0 - c3.z),
    )
}

fn residuals(pose: &Pose, points2d: &[Vector2<f64>], points3d: &[Vector3<f64>], intr: &Intrinsics) -> Option<(Vec<Vector2<f64>>, f64)> {
    let r = pose.rotation_matrix();
    let mut out = Vec::with_capacity(points3d.len());
    let mut cost = 0.0;
    for (p2, p3) in points2d.iter().zip(points3d) {
        let pc = r * p3 + pose.translation;
        if pc.z < 1e-6 {
            return None;
        }
        let (u, v) = intr.project(&pc);
        let res = Vector2::new(u - p2.x, v - p2.y);
        cost += res.norm_squared();
        out.push(res);
    }
    Some((out, cost))
}

fn lm_refine(init: Pose, points2d: &[Vector2<f64>], points3d: &[Vector3<f64>], intr: &Intrinsics) -> Result<(Pose, f64)> {
    let mut pose = init;
    let (_, mut cost) = residuals(&pose, points2d, points3d, intr)
        .ok_or(Error::Pnp("initialization puts points behind the camera"))?;
    let mut lambda = 1e-3;
    for _ in 0..40 {
        let rotm = pose.rotation_matrix();
        let mut jtj = Matrix6::<f64>::zeros();
        let mut jtr = Vector6::<f64>::zeros();
        let (res, _) = residuals(&pose, points2d, points3d, intr).unwrap();
        for (i, p3) in points3d.iter().enumerate() {
            let pc = rotm * p3 + pose.translation;
            let dproj = nalgebra::Matrix2x3::new(
                intr.fx / pc.z,
                0.0,
                -intr.fx * pc.x / (pc.z * pc.z),
                0.0,
                intr.fy / pc.z,
                -intr.fy * pc.y / (pc.z * pc.z),
            );
            let drot = rotated_point_jacobian(&pose.rotation, &rotm, p3);
            let jr = dproj * drot; // 2x3 wrt rotation vector
            let jt = dproj; // 2x3 wrt translation
            let mut j = nalgebra::Matrix2x6::zeros();
            j.fixed_view_mut::<2, 3>(0, 0).copy_from(&jr);
            j.fixed_view_mut::<2, 3>(0, 3).copy_from(&jt);
            jtj += j.transpose() * j;
            jtr += j.transpose() * res[i];
        }
        let mut damped = jtj;
        for k in 0..6 {
            damped[(k, k)] += lambda * jtj[(k, k)].max(1e-9);
        }
        let Some(step) = damped.lu().solve(&(-jtr)) else {
            lambda *= 10.0;
            continue;
        };
        let cand = Pose::new(
            pose.rotation + step.fixed_rows::<3>(0).into_owned(),
            pose.translation + step.fixed_rows::<3>(3).into_owned(),
        );
        match residuals(&cand, points2d, points3d, intr) {
            Some((_, c)) if c < cost => {
                pose = cand;
                cost = c;
                lambda = (lambda * 0.3).max(1e-12);
                if step.norm() < 1e-12 {
                    break;
                }
            }
            _ => {
                lambda *= 10.0;
                if lambda > 1e12 {
                    break;
                }
            }
        }
    }
    let (res, _) = residuals(&pose, points2d, points3d, intr).unwrap();
    let mean = res.iter().map(|r| r.norm()).sum::<f64>() / res.len() as f64;
    Ok((pose, mean))
}
