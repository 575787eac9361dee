//! Quaternion and small-angle algebra.
//!
//! # Conventions
//!
//! Quaternions are Hamilton, scalar-first `[w, x, y, z]`. A unit quaternion
//! `q` describes the orientation of a frame `B` with respect to a frame `A`:
//! its rotation matrix `C = R(q)` maps coordinates expressed in `B` into `A`,
//! `v_A = C · v_B`, and `v_A = q ⊗ [0, v_B] ⊗ q⁻¹`.
//!
//! With world orientations `q_w1`, `q_w2` of two rigs (body rates integrate
//! as `q̇_wi = ½ q_wi ⊗ [0, ω_i]`), the relative orientation is
//! `q = q_w1⁻¹ ⊗ q_w2`, so it evolves as `q̇ = ½ (q ⊗ ω̄₂ − ω̄₁ ⊗ q)`.
//!
//! Rotation errors are right-multiplicative: `q = q̂ ⊗ exp(δθ)`, with `δθ`
//! expressed in the `B` frame.

use std::ops::Mul;

use nalgebra::{Matrix3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Angles within this distance of π are outside the log map's domain.
pub const LOG_DOMAIN_MARGIN: f64 = 1e-9;

/// Unit quaternion, scalar first. Construction always normalizes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", from = "[f64; 4]")]
pub struct UnitQuaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl From<UnitQuaternion> for [f64; 4] {
    fn from(q: UnitQuaternion) -> Self {
        q.to_array()
    }
}

impl From<[f64; 4]> for UnitQuaternion {
    /// Values already of unit length (to rounding) are kept bit-for-bit.
    fn from(a: [f64; 4]) -> Self {
        let n2 = a.iter().map(|v| v * v).sum::<f64>();
        if (n2 - 1.0).abs() < 1e-14 {
            UnitQuaternion { w: a[0], x: a[1], y: a[2], z: a[3] }
        } else {
            UnitQuaternion::new_normalize(a[0], a[1], a[2], a[3])
        }
    }
}

impl Default for UnitQuaternion {
    fn default() -> Self {
        Self::identity()
    }
}

impl UnitQuaternion {
    pub const fn identity() -> Self {
        Self { w: 1.0, x: 0.0, y: 0.0, z: 0.0 }
    }

    /// Normalizes the given components. A zero quaternion maps to identity.
    pub fn new_normalize(w: f64, x: f64, y: f64, z: f64) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if n == 0.0 || !n.is_finite() {
            return Self::identity();
        }
        Self { w: w / n, x: x / n, y: y / n, z: z / n }
    }

    pub fn from_vector4(v: &Vector4<f64>) -> Self {
        Self::new_normalize(v[0], v[1], v[2], v[3])
    }

    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::identity();
        }
        small_angle_to_quat(&(axis * (angle / n)))
    }

    /// Roll-pitch-yaw (radians), applied as `Rz(yaw) · Ry(pitch) · Rx(roll)`.
    pub fn from_rpy(roll: f64, pitch: f64, yaw: f64) -> Self {
        let rz = Self::from_axis_angle(&Vec3::z(), yaw);
        let ry = Self::from_axis_angle(&Vec3::y(), pitch);
        let rx = Self::from_axis_angle(&Vec3::x(), roll);
        rz * ry * rx
    }

    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn vector_part(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn to_vector4(&self) -> Vector4<f64> {
        Vector4::new(self.w, self.x, self.y, self.z)
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn inverse(&self) -> Self {
        Self { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    /// Representative of the double cover with non-negative scalar part.
    pub fn canonical(&self) -> Self {
        if self.w < 0.0 {
            Self { w: -self.w, x: -self.x, y: -self.y, z: -self.z }
        } else {
            *self
        }
    }

    pub fn to_rotation_matrix(&self) -> Mat3 {
        quat_to_rotmat(self)
    }

    /// `q ⊗ [0, v] ⊗ q⁻¹`
    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        let u = self.vector_part();
        let t = 2.0 * u.cross(v);
        v + self.w * t + u.cross(&t)
    }

    pub fn exp(delta: &Vec3) -> Self {
        small_angle_to_quat(delta)
    }

    pub fn log(&self) -> Result<Vec3> {
        quat_to_small_angle(self)
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let c = self.canonical();
        2.0 * c.vector_part().norm().atan2(c.w)
    }

    /// Angle of `self⁻¹ ⊗ other`.
    pub fn angle_to(&self, other: &Self) -> f64 {
        (self.inverse() * *other).angle()
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let a = self.canonical();
        let b = other.canonical();
        (a.to_vector4() - b.to_vector4()).amax() <= tol
    }
}

impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;

    fn mul(self, rhs: UnitQuaternion) -> UnitQuaternion {
        quat_multiply(&self, &rhs)
    }
}

/// Pose of frame 2 expressed in frame 1: `rotation` maps frame-2 vectors into
/// frame 1 and `translation` is the origin of frame 2 in frame-1 coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct RelativePose {
    pub rotation: UnitQuaternion,
    pub translation: Vec3,
}

impl RelativePose {
    pub fn new(rotation: UnitQuaternion, translation: Vec3) -> Self {
        Self { rotation, translation }
    }

    /// Maps a point from frame 2 into frame 1.
    pub fn transform_point(&self, x2: &Vec3) -> Vec3 {
        self.rotation.rotate(x2) + self.translation
    }

    /// Maps a point from frame 1 into frame 2.
    pub fn inverse_transform_point(&self, x1: &Vec3) -> Vec3 {
        self.rotation.inverse().rotate(&(x1 - self.translation))
    }
}

/// Hamilton product of raw (not necessarily unit) quaternions, `[w, x, y, z]`.
pub fn hamilton(a: &Vector4<f64>, b: &Vector4<f64>) -> Vector4<f64> {
    let (aw, ax, ay, az) = (a[0], a[1], a[2], a[3]);
    let (bw, bx, by, bz) = (b[0], b[1], b[2], b[3]);
    Vector4::new(
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )
}

/// Pure quaternion `[0, v]`.
pub fn pure(v: &Vec3) -> Vector4<f64> {
    Vector4::new(0.0, v.x, v.y, v.z)
}

pub fn quat_multiply(a: &UnitQuaternion, b: &UnitQuaternion) -> UnitQuaternion {
    UnitQuaternion::from_vector4(&hamilton(&a.to_vector4(), &b.to_vector4()))
}

pub fn quat_to_rotmat(q: &UnitQuaternion) -> Mat3 {
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    let (xx, yy, zz) = (x * x, y * y, z * z);
    let (xy, xz, yz) = (x * y, x * z, y * z);
    let (wx, wy, wz) = (w * x, w * y, w * z);
    Mat3::new(
        1.0 - 2.0 * (yy + zz),
        2.0 * (xy - wz),
        2.0 * (xz + wy),
        2.0 * (xy + wz),
        1.0 - 2.0 * (xx + zz),
        2.0 * (yz - wx),
        2.0 * (xz - wy),
        2.0 * (yz + wx),
        1.0 - 2.0 * (xx + yy),
    )
}

/// Quaternion of an orthonormal rotation matrix (Shepperd's method).
pub fn rotmat_to_quat(m: &Mat3) -> UnitQuaternion {
    let tr = m.trace();
    if tr > 0.0 {
        let s = (tr + 1.0).sqrt() * 2.0;
        UnitQuaternion::new_normalize(
            0.25 * s,
            (m[(2, 1)] - m[(1, 2)]) / s,
            (m[(0, 2)] - m[(2, 0)]) / s,
            (m[(1, 0)] - m[(0, 1)]) / s,
        )
    } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
        let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
        UnitQuaternion::new_normalize(
            (m[(2, 1)] - m[(1, 2)]) / s,
            0.25 * s,
            (m[(0, 1)] + m[(1, 0)]) / s,
            (m[(0, 2)] + m[(2, 0)]) / s,
        )
    } else if m[(1, 1)] > m[(2, 2)] {
        let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
        UnitQuaternion::new_normalize(
            (m[(0, 2)] - m[(2, 0)]) / s,
            (m[(0, 1)] + m[(1, 0)]) / s,
            0.25 * s,
            (m[(1, 2)] + m[(2, 1)]) / s,
        )
    } else {
        let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
        UnitQuaternion::new_normalize(
            (m[(1, 0)] - m[(0, 1)]) / s,
            (m[(0, 2)] + m[(2, 0)]) / s,
            (m[(1, 2)] + m[(2, 1)]) / s,
            0.25 * s,
        )
    }
}

/// `⌊v×⌋`, so that `skew(v) · u = v × u`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Exponential map: rotation by `‖δθ‖` about `δθ / ‖δθ‖`.
pub fn small_angle_to_quat(delta: &Vec3) -> UnitQuaternion {
    let theta = delta.norm();
    if theta < 1e-8 {
        // series of cos(θ/2) and sin(θ/2)/θ
        let t2 = theta * theta;
        let k = 0.5 * (1.0 - t2 / 24.0);
        return UnitQuaternion::new_normalize(1.0 - t2 / 8.0, k * delta.x, k * delta.y, k * delta.z);
    }
    let half = 0.5 * theta;
    let k = half.sin() / theta;
    UnitQuaternion::new_normalize(half.cos(), k * delta.x, k * delta.y, k * delta.z)
}

/// Log map, inverse of [`small_angle_to_quat`]. `q` and `−q` give the same
/// result. Fails for rotation angles at or numerically near π.
pub fn quat_to_small_angle(q: &UnitQuaternion) -> Result<Vec3> {
    let c = q.canonical();
    let u = c.vector_part();
    let n = u.norm();
    let angle = 2.0 * n.atan2(c.w);
    if angle >= std::f64::consts::PI - LOG_DOMAIN_MARGIN {
        return Err(Error::OutOfDomain(format!(
            "rotation angle {angle:.12} rad is too close to π for the log map"
        )));
    }
    if n < 1e-8 {
        return Ok(u * (2.0 / c.w));
    }
    Ok(u * (angle / n))
}
