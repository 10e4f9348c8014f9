//! Least-squares rigid alignment (SVD method) and its RANSAC wrapper.

use nalgebra::{Matrix3, Rotation3, Vector3};
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

use crate::camera::Pose;
use crate::{Error, Result};

/// Weighted least-squares rotation + translation mapping `source` onto
/// `target`. The returned rotation is always proper (det = +1).
pub fn rigid_fit_svd(source: &[Vector3<f64>], target: &[Vector3<f64>], weights: Option<&[f64]>) -> Result<Pose> {
    let n = source.len();
    if n < 3 || target.len() != n {
        return Err(Error::DegenerateFit);
    }
    let w_of = |i: usize| weights.map_or(1.0, |w| w[i]);
    let wsum: f64 = (0..n).map(w_of).sum();
    if wsum <= 0.0 {
        return Err(Error::DegenerateFit);
    }
    let mut cs = Vector3::zeros();
    let mut ct = Vector3::zeros();
    for i in 0..n {
        cs += w_of(i) * source[i];
        ct += w_of(i) * target[i];
    }
    cs /= wsum;
    ct /= wsum;

    let mut h = Matrix3::zeros();
    for i in 0..n {
        h += w_of(i) * (source[i] - cs) * (target[i] - ct).transpose();
    }
    let svd = h.svd(true, true);
    let sv = svd.singular_values;
    // Rank <= 1 means the weighted points are collinear (or coincident):
    // the in-plane rotation is unobservable.
    if sv[1] <= 1e-12 * sv[0].max(1e-300) {
        return Err(Error::DegenerateFit);
    }
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let v = vt.transpose();
    let mut d = Matrix3::identity();
    d[(2, 2)] = (v * u.transpose()).determinant().signum();
    let r = v * d * u.transpose();
    let rot = Rotation3::from_matrix_unchecked(r);
    let t = ct - r * cs;
    Ok(Pose::from_parts(&rot, t))
}

/// Sum of squared weighted alignment residuals under a pose.
pub fn rigid_objective(pose: &Pose, source: &[Vector3<f64>], target: &[Vector3<f64>], weights: Option<&[f64]>) -> f64 {
    let r = pose.rotation_matrix();
    source
        .iter()
        .zip(target)
        .enumerate()
        .map(|(i, (s, t))| weights.map_or(1.0, |w| w[i]) * (r * s + pose.translation - t).norm_squared())
        .sum()
}

/// Robust rigid alignment: 3-point minimal samples, consensus by
/// residual threshold (mm), one refit on the final inlier set.
/// Deterministic for a fixed seed.
pub fn ransac_rigid(
    source: &[Vector3<f64>],
    target: &[Vector3<f64>],
    inlier_threshold_mm: f64,
    max_iters: usize,
    rng_seed: u64,
) -> Result<(Pose, Vec<bool>)> {
    let n = source.len();
    if n < 3 || target.len() != n {
        return Err(Error::RansacNoConsensus);
    }
    if inlier_threshold_mm <= 0.0 {
        return Err(Error::Config("ransac threshold must be > 0".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
    let mut best_count = 0usize;
    let mut best_inliers: Vec<usize> = Vec::new();
    for _ in 0..max_iters {
        let pick = rand::seq::index::sample(&mut rng, n, 3);
        let s: Vec<Vector3<f64>> = pick.iter().map(|i| source[i]).collect();
        let t: Vec<Vector3<f64>> = pick.iter().map(|i| target[i]).collect();
        let Ok(pose) = rigid_fit_svd(&s, &t, None) else {
            continue;
        };
        let r = pose.rotation_matrix();
        let inliers: Vec<usize> = (0..n)
            .filter(|&i| (r * source[i] + pose.translation - target[i]).norm() <= inlier_threshold_mm)
            .collect();
        if inliers.len() > best_count {
            best_count = inliers.len();
            best_inliers = inliers;
            if best_count == n {
                break;
            }
        }
    }
    if best_count < 3 {
        return Err(Error::RansacNoConsensus);
    }
    let s: Vec<Vector3<f64>> = best_inliers.iter().map(|&i| source[i]).collect();
    let t: Vec<Vector3<f64>> = best_inliers.iter().map(|&i| target[i]).collect();
    let pose = rigid_fit_svd(&s, &t, None)?;
    let r = pose.rotation_matrix();
    let mask: Vec<bool> = (0..n)
        .map(|i| (r * source[i] + pose.translation - target[i]).norm() <= inlier_threshold_mm)
        .collect();
    Ok((pose, mask))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cloud(seed: u64, n: usize) -> Vec<Vector3<f64>> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                Vector3::new(
                    rng.random_range(-60.0..60.0),
                    rng.random_range(-80.0..80.0),
                    rng.random_range(-50.0..50.0),
                )
            })
            .collect()
    }

    fn planted_pose() -> Pose {
        Pose::new(Vector3::new(0.2, -0.4, 0.1), Vector3::new(12.0, -5.0, 30.0))
    }

    #[test]
    fn identity_for_equal_clouds() {
        let pts = cloud(1, 10);
        let pose = rigid_fit_svd(&pts, &pts, None).unwrap();
        assert!(pose.rotation.norm() < 1e-9);
        assert!(pose.translation.norm() < 1e-9);
    }

    #[test]
    fn recovers_planted_transform() {
        let src = cloud(2, 25);
        let planted = planted_pose();
        let tgt: Vec<_> = src.iter().map(|p| planted.apply(p)).collect();
        let pose = rigid_fit_svd(&src, &tgt, None).unwrap();
        assert!((pose.rotation - planted.rotation).norm() < 1e-6);
        assert!((pose.translation - planted.translation).norm() < 1e-6);
    }

    #[test]
    fn mirrored_cloud_still_yields_proper_rotation() {
        let src = cloud(3, 15);
        // Reflection, not a rotation: negate x.
        let tgt: Vec<_> = src.iter().map(|p| Vector3::new(-p.x, p.y, p.z)).collect();
        let pose = rigid_fit_svd(&src, &tgt, None).unwrap();
        let det = pose.rotation_matrix().matrix().determinant();
        assert_relative_eq!(det, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let src: Vec<_> = (0..5).map(|i| Vector3::new(i as f64, 2.0 * i as f64, 0.0)).collect();
        assert!(matches!(rigid_fit_svd(&src, &src, None), Err(Error::DegenerateFit)));
    }

    #[test]
    fn objective_no_worse_than_identity() {
        let src = cloud(4, 12);
        let tgt = cloud(5, 12);
        let pose = rigid_fit_svd(&src, &tgt, None).unwrap();
        let at_fit = rigid_objective(&pose, &src, &tgt, None);
        let at_id = rigid_objective(&Pose::identity(), &src, &tgt, None);
        assert!(at_fit <= at_id + 1e-9);
    }

    #[test]
    fn ransac_clean_data_matches_direct_fit() {
        let src = cloud(6, 30);
        let planted = planted_pose();
        let tgt: Vec<_> = src.iter().map(|p| planted.apply(p)).collect();
        let (pose, mask) = ransac_rigid(&src, &tgt, 10.0, 512, 99).unwrap();
        assert!(mask.iter().all(|&m| m));
        let direct = rigid_fit_svd(&src, &tgt, None).unwrap();
        assert!((pose.rotation - direct.rotation).norm() < 1e-9);
        assert!((pose.translation - direct.translation).norm() < 1e-9);
    }

    #[test]
    fn ransac_rejects_30_percent_outliers() {
        let src = cloud(7, 40);
        let planted = planted_pose();
        let mut tgt: Vec<_> = src.iter().map(|p| planted.apply(p)).collect();
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        for i in 0..12 {
            let dir = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
            .normalize();
            tgt[i] += 50.0 * dir;
        }
        let (pose, mask) = ransac_rigid(&src, &tgt, 10.0, 512, 4242).unwrap();
        let rot_err = (Rotation3::from_scaled_axis(pose.rotation).inverse()
            * Rotation3::from_scaled_axis(planted.rotation))
        .angle();
        assert!(rot_err < 0.5f64.to_radians(), "rotation error {}", rot_err.to_degrees());
        assert!(mask.iter().skip(12).all(|&m| m));
    }

    #[test]
    fn ransac_no_consensus_is_an_error() {
        // Targets are independent random points: no rigid map fits more
        // than the occasional 3-point sample at a tight threshold.
        let src = cloud(9, 30);
        let tgt = cloud(10, 30);
        let r = ransac_rigid(&src, &tgt, 1e-6, 256, 7);
        assert!(matches!(r, Err(Error::RansacNoConsensus)));
    }

    #[test]
    fn ransac_is_deterministic_for_fixed_seed() {
        let src = cloud(11, 25);
        let planted = planted_pose();
        let mut tgt: Vec<_> = src.iter().map(|p| planted.apply(p)).collect();
        tgt[3] += Vector3::new(40.0, 0.0, 0.0);
        let a = ransac_rigid(&src, &tgt, 8.0, 512, 1234).unwrap();
        let b = ransac_rigid(&src, &tgt, 8.0, 512, 1234).unwrap();
        assert_eq!(a.0.rotation, b.0.rotation);
        assert_eq!(a.0.translation, b.0.translation);
        assert_eq!(a.1, b.1);
    }
}
