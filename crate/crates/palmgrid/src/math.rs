//! Quaternion and rigid-transform helpers shared across the crate.
//!
//! Orientations are unit quaternions, stored w-first in every serialized
//! format. Pose algebra is quaternion-only; compositions renormalize so long
//! rollouts cannot drift. The homogeneous-matrix route exists only in tests,
//! as an independent cross-check.

use nalgebra::{Quaternion, Unit, UnitQuaternion, Vector3};

pub type Vec3 = Vector3<f64>;
pub type UnitQuat = UnitQuaternion<f64>;

/// Tolerance for "is this quaternion/axis unit-norm" checks.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// A rigid transform: rotation followed by translation (`p ↦ R p + t`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub translation: Vec3,
    pub rotation: UnitQuat,
}

impl Transform {
    pub const fn new(translation: Vec3, rotation: UnitQuat) -> Self {
        Self {
            translation,
            rotation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Vec3::zeros(), UnitQuat::identity())
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self::new(Vec3::new(x, y, z), UnitQuat::identity())
    }

    pub fn from_rotation(rotation: UnitQuat) -> Self {
        Self::new(Vec3::zeros(), rotation)
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    ///
    /// The composed rotation is renormalized, so chains of thousands of
    /// compositions keep unit norm to machine precision.
    pub fn compose(&self, other: &Transform) -> Transform {
        let rotation = renormalize(self.rotation * other.rotation);
        let translation = self.translation + self.rotation * other.translation;
        Transform {
            translation,
            rotation,
        }
    }

    pub fn apply(&self, point: &Vec3) -> Vec3 {
        self.rotation * point + self.translation
    }

    /// Rotate a direction vector (no translation).
    pub fn rotate(&self, dir: &Vec3) -> Vec3 {
        self.rotation * dir
    }

    pub fn inverse(&self) -> Transform {
        let inv_rot = self.rotation.inverse();
        Transform {
            translation: -(inv_rot * self.translation),
            rotation: inv_rot,
        }
    }
}

/// Renormalize a unit quaternion after composition.
pub fn renormalize(q: UnitQuat) -> UnitQuat {
    UnitQuaternion::new_normalize(q.into_inner())
}

/// Build a unit quaternion from `[w, x, y, z]`.
pub fn quat_from_wxyz(wxyz: [f64; 4]) -> UnitQuat {
    Unit::new_normalize(Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]))
}

/// Extract `[w, x, y, z]` from a unit quaternion.
pub fn quat_to_wxyz(q: &UnitQuat) -> [f64; 4] {
    [q.w, q.i, q.j, q.k]
}

/// Rotation of `angle` radians about `axis` (axis must be unit-norm).
pub fn rotation_about(axis: &Vec3, angle: f64) -> UnitQuat {
    let half = 0.5 * angle;
    let (s, c) = half.sin_cos();
    Unit::new_normalize(Quaternion::new(c, axis.x * s, axis.y * s, axis.z * s))
}

/// Norm deviation from unit length, `| |q| - 1 |`.
pub fn unit_norm_error(q: &UnitQuat) -> f64 {
    (q.into_inner().norm() - 1.0).abs()
}

/// Exponential-map step: rotate by angular velocity `omega` (world frame,
/// rad/s) for `dt` seconds. Exact for constant `omega` over the step.
pub fn integrate_orientation(q: &UnitQuat, omega: &Vec3, dt: f64) -> UnitQuat {
    let angle = omega.norm() * dt;
    if angle < 1e-14 {
        return *q;
    }
    let axis = omega / omega.norm();
    renormalize(rotation_about(&axis, angle) * *q)
}
