//! Pinhole camera model and rigid pose.

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Pinhole intrinsics in pixels. Image x grows right, y grows down,
/// camera z points into the scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    /// Projects a camera-space point (mm) to pixel coordinates.
    pub fn project(&self, p: &Vector3<f64>) -> (f64, f64) {
        (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }

    /// Back-projects pixel (u, v) at metric depth (mm) to camera space.
    pub fn backproject(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        Vector3::new(
            (u - self.cx) / self.fx * depth,
            (v - self.cy) / self.fy * depth,
            depth,
        )
    }
}

/// Rigid model-to-camera transform: axis-angle rotation (radians) plus
/// translation (mm). Exactly six scalars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: Vector3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: Vector3::zeros(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Vector3<f64>, translation: Vector3<f64>) -> Self {
        Pose {
            rotation,
            translation,
        }
    }

    pub fn rotation_matrix(&self) -> Rotation3<f64> {
        Rotation3::from_scaled_axis(self.rotation)
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation_matrix() * p + self.translation
    }

    /// Builds a pose from a rotation matrix and translation; the stored
    /// axis-angle is canonical (magnitude < pi).
    pub fn from_parts(rot: &Rotation3<f64>, translation: Vector3<f64>) -> Self {
        Pose {
            rotation: rot.scaled_axis(),
            translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let r = self.rotation_matrix().inverse();
        Pose::from_parts(&r, -(r * self.translation))
    }

    /// Composition: (self ∘ other)(p) = self(other(p)).
    pub fn compose(&self, other: &Pose) -> Self {
        let ra = self.rotation_matrix();
        let rb = other.rotation_matrix();
        Pose::from_parts(&(ra * rb), ra * other.translation + self.translation)
    }

    pub fn is_finite(&self) -> bool {
        self.rotation.iter().all(|v| v.is_finite()) && self.translation.iter().all(|v| v.is_finite())
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite("pose"))
        }
    }

    /// Head orientation angles of this pose in degrees: yaw (positive =
    /// facing direction tilts toward image +x) and pitch (positive =
    /// facing direction tilts up, i.e. toward image -y).
    pub fn yaw_pitch_deg(&self) -> (f64, f64) {
        let dir = self.rotation_matrix() * Vector3::new(0.0, 0.0, 1.0);
        let yaw = dir.x.atan2(dir.z).to_degrees();
        let pitch = (-dir.y).atan2((dir.x * dir.x + dir.z * dir.z).sqrt()).to_degrees();
        (yaw, pitch)
    }
}

/// Skew-symmetric cross-product matrix `[v]x`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Right Jacobian of SO(3): relates additive axis-angle increments to
/// body-frame rotation increments, `exp((w + dw)^) ≈ exp(w^) exp((Jr(w) dw)^)`.
pub fn so3_right_jacobian(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = w.norm_squared();
    let wx = skew(w);
    if theta2 < 1e-14 {
        return Matrix3::identity() - 0.5 * wx + (1.0 / 6.0) * (wx * wx);
    }
    let theta = theta2.sqrt();
    let a = (1.0 - theta.cos()) / theta2;
    let b = (theta - theta.sin()) / (theta2 * theta);
    Matrix3::identity() - a * wx + b * (wx * wx)
}

/// Derivative of the rotated point `R(w) v` with respect to the
/// axis-angle vector `w`: a 3x3 matrix `d(Rv)/dw = -R [v]x Jr(w)`.
pub fn rotated_point_jacobian(w: &Vector3<f64>, r: &Rotation3<f64>, v: &Vector3<f64>) -> Matrix3<f64> {
    -(r.matrix() * skew(v) * so3_right_jacobian(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn backproject_project_roundtrip() {
        let intr = Intrinsics {
            fx: 800.0,
            fy: 800.0,
            cx: 150.0,
            cy: 150.0,
        };
        let p = intr.backproject(200.0, 100.0, 550.0);
        let (u, v) = intr.project(&p);
        assert_relative_eq!(u, 200.0, epsilon = 1e-9);
        assert_relative_eq!(v, 100.0, epsilon = 1e-9);
        assert_relative_eq!(p.z, 550.0);
    }

    #[test]
    fn principal_point_backprojects_on_axis() {
        let intr = Intrinsics {
            fx: 700.0,
            fy: 650.0,
            cx: 160.0,
            cy: 120.0,
        };
        let p = intr.backproject(160.0, 120.0, 500.0);
        assert_relative_eq!(p.x, 0.0);
        assert_relative_eq!(p.y, 0.0);
        assert_relative_eq!(p.z, 500.0);
    }

    #[test]
    fn rotated_point_jacobian_matches_finite_differences() {
        let w = Vector3::new(0.3, -0.2, 0.5);
        let v = Vector3::new(12.0, -7.0, 30.0);
        let r = Rotation3::from_scaled_axis(w);
        let jac = rotated_point_jacobian(&w, &r, &v);
        let h = 1e-6;
        for i in 0..3 {
            let mut wp = w;
            let mut wm = w;
            wp[i] += h;
            wm[i] -= h;
            let fd = (Rotation3::from_scaled_axis(wp) * v - Rotation3::from_scaled_axis(wm) * v) / (2.0 * h);
            for k in 0..3 {
                assert_relative_eq!(jac[(k, i)], fd[k], epsilon = 1e-5, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn rotated_point_jacobian_near_zero_angle() {
        let w = Vector3::new(1e-9, 0.0, -1e-9);
        let v = Vector3::new(1.0, 2.0, 3.0);
        let r = Rotation3::from_scaled_axis(w);
        let jac = rotated_point_jacobian(&w, &r, &v);
        // At w = 0 the Jacobian reduces to -[v]x.
        let expect = -skew(&v);
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(jac[(i, j)], expect[(i, j)], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn yaw_pitch_sign_conventions() {
        // Positive yaw about the -y axis turns +z toward +x with y-down cameras.
        let pose = Pose::new(Vector3::new(0.0, 30f64.to_radians(), 0.0), Vector3::zeros());
        let (yaw, pitch) = pose.yaw_pitch_deg();
        assert_relative_eq!(yaw, 30.0, epsilon = 1e-9);
        assert_relative_eq!(pitch, 0.0, epsilon = 1e-9);
        // Positive rotation about +x tips +z toward -y (image up) = pitch up.
        let pose = Pose::new(Vector3::new(20f64.to_radians(), 0.0, 0.0), Vector3::zeros());
        let (_, pitch) = pose.yaw_pitch_deg();
        assert_relative_eq!(pitch, 20.0, epsilon = 1e-9);
    }
}
