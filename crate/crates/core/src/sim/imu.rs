//! Accelerometer and gyroscope samples for both rigs with additive white noise.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ekf::ImuPair;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::sim::rig::{RigKinematics, RigState};

/// Standard gravity in world axes (z up), m/s².
pub const GRAVITY: Vec3 = Vec3::new(0.0, 0.0, -9.81);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImuNoiseConfig {
    /// Per-sample gyro variance, (rad/s)².
    pub gyro_variance: f64,
    /// Per-sample accelerometer variance, (m/s²)².
    pub accel_variance: f64,
    /// Hz
    pub rate: f64,
    pub multiplier: f64,
}

impl Default for ImuNoiseConfig {
    fn default() -> Self {
        Self { gyro_variance: 1.225e-7, accel_variance: 1.6e-5, rate: 100.0, multiplier: 1.0 }
    }
}

impl ImuNoiseConfig {
    pub fn noise_free() -> Self {
        Self { multiplier: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.gyro_variance, self.accel_variance, self.multiplier].iter().all(|v| v.is_finite() && *v >= 0.0)
            && self.rate.is_finite()
            && self.rate > 0.0;
        if !ok {
            return Err(Error::Config("IMU variances and multiplier must be >= 0, rate > 0".into()));
        }
        Ok(())
    }

    pub fn gyro(&self) -> f64 {
        self.gyro_variance * self.multiplier
    }

    pub fn accel(&self) -> f64 {
        self.accel_variance * self.multiplier
    }
}

/// Specific force in rig axes, `Rᵀ (A − g)`.
pub fn specific_force(rig: &RigState, g: &Vec3) -> Vec3 {
    rig.rotation.inverse().rotate(&(rig.accel - g))
}

fn noisy<R: Rng + ?Sized>(v: Vec3, var: f64, rng: &mut R) -> Vec3 {
    let s = var.sqrt();
    v + Vec3::from_fn(|_, _| s * rng.sample::<f64, _>(StandardNormal))
}

/// One IMU sample for both rigs at time `t`.
pub fn synth_imu<R: Rng + ?Sized>(
    t: f64,
    kin: &RigKinematics,
    g: &Vec3,
    noise: &ImuNoiseConfig,
    rng: &mut R,
) -> ImuPair {
    let [r1, r2] = &kin.rigs;
    let (gv, av) = (noise.gyro(), noise.accel());
    // draw order is fixed: w1, w2, a1, a2
    let w1 = noisy(r1.omega, gv, rng);
    let w2 = noisy(r2.omega, gv, rng);
    let a1 = noisy(specific_force(r1, g), av, rng);
    let a2 = noisy(specific_force(r2, g), av, rng);
    let mut variance = nalgebra::SVector::<f64, 12>::zeros();
    variance.fixed_rows_mut::<6>(0).fill(gv);
    variance.fixed_rows_mut::<6>(6).fill(av);
    ImuPair { t, w1, w2, a1, a2, variance }
}
