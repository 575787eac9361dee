//! Level figure-eight flight path (lemniscate of Gerono) with the nose
//! along the velocity.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{UnitQuaternion, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectoryConfig {
    /// Half-length of the figure eight, m.
    pub amplitude: f64,
    /// Angular rate of the path parameter, rad/s.
    pub omega: f64,
    /// m
    pub altitude: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self { amplitude: 200.0, omega: 0.053, altitude: 120.0 }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.omega > 0.0) || !self.altitude.is_finite() {
            return Err(Error::Config("trajectory amplitude and omega must be > 0".into()));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }
}

/// Body frame: x forward, y left, z up; world z up.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    /// Body to world.
    pub rotation: UnitQuaternion,
    /// Angular velocity in body axes, rad/s.
    pub omega: Vec3,
    /// Angular acceleration in body axes, rad/s².
    pub omega_dot: Vec3,
}

pub fn body_trajectory(t: f64, cfg: &TrajectoryConfig) -> BodyState {
    let (a, w) = (cfg.amplitude, cfg.omega);
    let (s1, c1) = (w * t).sin_cos();
    let (s2, c2) = (2.0 * w * t).sin_cos();

    let position = Vec3::new(a * s1, 0.5 * a * s2, cfg.altitude);
    let velocity = Vec3::new(a * w * c1, a * w * c2, 0.0);
    let acceleration = Vec3::new(-a * w * w * s1, -2.0 * a * w * w * s2, 0.0);
    let jerk = Vec3::new(-a * w.powi(3) * c1, -4.0 * a * w.powi(3) * c2, 0.0);

    let (vx, vy) = (velocity.x, velocity.y);
    let (ax, ay) = (acceleration.x, acceleration.y);
    let num = vx * ay - vy * ax;
    let den = vx * vx + vy * vy;
    let num_dot = vx * jerk.y - vy * jerk.x;
    let den_dot = 2.0 * (vx * ax + vy * ay);
    let psi = vy.atan2(vx);
    let psi_dot = num / den;
    let psi_ddot = (num_dot * den - num * den_dot) / (den * den);

    BodyState {
        position,
        velocity,
        acceleration,
        rotation: UnitQuaternion::from_axis_angle(&Vec3::z(), psi),
        omega: Vec3::new(0.0, 0.0, psi_dot),
        omega_dot: Vec3::new(0.0, 0.0, psi_ddot),
    }
}
