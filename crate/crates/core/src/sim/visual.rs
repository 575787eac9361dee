//! Stand-in for a monocular relative pose solver: the true rotation and
//! translation direction with Gaussian noise and occasional gross outliers.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{small_angle_to_quat, RelativePose, Vec3};
use crate::prior::VisualMeasurement;
use nalgebra::{Matrix6, Vector6};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VisualNoiseConfig {
    /// Rotation noise std per axis, rad.
    pub sigma_theta: Vec3,
    /// Translation noise std per axis before normalization, m.
    pub sigma_p: Vec3,
    /// Reported std as a multiple of the actual one.
    pub reported_scale: f64,
    pub outlier_prob: f64,
    pub outlier_scale: f64,
    /// Hz
    pub rate: f64,
}

impl Default for VisualNoiseConfig {
    fn default() -> Self {
        Self {
            sigma_theta: Vec3::new(0.035, 0.006, 0.003),
            sigma_p: Vec3::new(0.004, 0.004, 0.06),
            reported_scale: 2.0,
            outlier_prob: 0.05,
            outlier_scale: 20.0,
            rate: 10.0,
        }
    }
}

impl VisualNoiseConfig {
    pub fn noise_free() -> Self {
        Self { sigma_theta: Vec3::zeros(), sigma_p: Vec3::zeros(), outlier_prob: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let sig_ok = self.sigma_theta.iter().chain(self.sigma_p.iter()).all(|v| v.is_finite() && *v >= 0.0);
        if !sig_ok || !(self.reported_scale > 0.0) || !(self.outlier_scale >= 0.0) {
            return Err(Error::Config("visual noise std-devs must be >= 0 and scales > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.outlier_prob) {
            return Err(Error::Config(format!("outlier_prob {} not in [0, 1]", self.outlier_prob)));
        }
        if !(self.rate > 0.0) {
            return Err(Error::Config("vision rate must be > 0".into()));
        }
        Ok(())
    }

    /// Covariance attached to each measurement.
    pub fn reported_covariance(&self) -> Matrix6<f64> {
        let s = Vector6::new(
            self.sigma_theta.x,
            self.sigma_theta.y,
            self.sigma_theta.z,
            self.sigma_p.x,
            self.sigma_p.y,
            self.sigma_p.z,
        ) * self.reported_scale;
        Matrix6::from_diagonal(&s.component_mul(&s))
    }
}

fn gaussian<R: Rng + ?Sized>(sigma: &Vec3, rng: &mut R) -> Vec3 {
    Vec3::from_fn(|i, _| sigma[i] * rng.sample::<f64, _>(StandardNormal))
}

/// `q_v = q ⊗ exp(n_θ)`, `dir_v = normalize(p + n_p)`; with probability
/// `outlier_prob` both perturbations are scaled by `outlier_scale`.
pub fn synth_visual<R: Rng + ?Sized>(truth: &RelativePose, cfg: &VisualNoiseConfig, rng: &mut R) -> VisualMeasurement {
    // draw order is fixed: outlier flag, rotation, translation
    let outlier = rng.random::<f64>() < cfg.outlier_prob;
    let scale = if outlier { cfg.outlier_scale } else { 1.0 };
    let n_theta = gaussian(&cfg.sigma_theta, rng) * scale;
    let n_p = gaussian(&cfg.sigma_p, rng) * scale;
    let p = truth.translation + n_p;
    let dir = if p.norm() > 0.0 { p.normalize() } else { truth.translation.normalize() };
    VisualMeasurement { q: truth.rotation * small_angle_to_quat(&n_theta), dir, cov: cfg.reported_covariance() }
}
