//! External forcing of the wing tips: an in-phase periodic force plus
//! short random gusts, independently drawn per side.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GUST_STREAM_BASE: u64 = 1 << 40;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DisturbanceConfig {
    /// N
    pub a_p: f64,
    /// Hz
    pub f_p: f64,
    /// N
    pub a_r_mean: f64,
    /// N
    pub a_r_std: f64,
    /// Hz
    pub f_r: f64,
    /// s
    pub t_r: f64,
    /// Smoothstep rise and fall time inside the gust window, s. Zero gives a
    /// rectangular pulse.
    pub t_edge: f64,
    pub seed: u64,
}

impl Default for DisturbanceConfig {
    fn default() -> Self {
        Self { a_p: 0.25, f_p: 1.5, a_r_mean: 1.0, a_r_std: 0.1, f_r: 0.125, t_r: 0.4, t_edge: 0.02, seed: 0 }
    }
}

impl DisturbanceConfig {
    pub fn calm() -> Self {
        Self { a_p: 0.0, a_r_mean: 0.0, a_r_std: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let mags = [self.a_p, self.a_r_mean, self.a_r_std, self.t_r, self.t_edge];
        if mags.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config("disturbance magnitudes and durations must be >= 0".into()));
        }
        if 2.0 * self.t_edge > self.t_r {
            return Err(Error::Config("gust edges longer than half the gust".into()));
        }
        if !(self.f_p > 0.0 && self.f_r > 0.0) || !self.f_p.is_finite() || !self.f_r.is_finite() {
            return Err(Error::Config("disturbance frequencies must be > 0".into()));
        }
        Ok(())
    }

    /// `a_p sin(2π f_p t)`
    pub fn periodic(&self, t: f64) -> f64 {
        self.a_p * (2.0 * PI * self.f_p * t).sin()
    }

    /// Gust magnitude drawn at epoch `k` (time `k / f_r`) for `side` (0 left,
    /// 1 right). Depends only on the seed, epoch and side.
    pub fn gust_magnitude(&self, k: u64, side: usize) -> f64 {
        if self.a_r_std == 0.0 {
            return self.a_r_mean;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(GUST_STREAM_BASE + 2 * k + side as u64);
        Normal::new(self.a_r_mean, self.a_r_std).expect("validated std").sample(&mut rng)
    }

    /// Gust force on one side; zero outside the active window after each epoch.
    pub fn gust(&self, t: f64, side: usize) -> f64 {
        if t < 0.0 || (self.a_r_mean == 0.0 && self.a_r_std == 0.0) {
            return 0.0;
        }
        let period = 1.0 / self.f_r;
        let k = (t * self.f_r).floor();
        let u = t - k * period;
        if k < 1.0 || u >= self.t_r {
            return 0.0;
        }
        self.envelope(u) * self.gust_magnitude(k as u64, side)
    }

    /// Gust shape at time `u` into the window, in `[0, 1]`.
    fn envelope(&self, u: f64) -> f64 {
        if self.t_edge == 0.0 {
            return 1.0;
        }
        let e = (u.min(self.t_r - u) / self.t_edge).clamp(0.0, 1.0);
        e * e * (3.0 - 2.0 * e)
    }
}

/// Wing-normal tip force `[left, right]` in N at time `t`.
pub fn disturbance_force(cfg: &DisturbanceConfig, t: f64) -> [f64; 2] {
    let p = cfg.periodic(t);
    [p + cfg.gust(t, 0), p + cfg.gust(t, 1)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calm_is_zero() {
        let cfg = DisturbanceConfig::calm();
        for i in 0..1000 {
            assert_eq!(disturbance_force(&cfg, i as f64 * 0.037), [0.0, 0.0]);
        }
    }

    #[test]
    fn periodic_quarter_cycle() {
        let cfg = DisturbanceConfig { a_r_mean: 0.0, a_r_std: 0.0, ..Default::default() };
        let f = disturbance_force(&cfg, 1.0 / 6.0);
        assert!((f[0] - 0.25).abs() < 1e-15);
        assert_eq!(f[0], f[1]);
    }

    #[test]
    fn gust_windows() {
        let cfg = DisturbanceConfig { a_p: 0.0, t_edge: 0.0, ..Default::default() };
        assert_eq!(disturbance_force(&cfg, 0.1), [0.0, 0.0]);
        assert_eq!(disturbance_force(&cfg, 7.99), [0.0, 0.0]);
        let f = disturbance_force(&cfg, 8.2);
        assert!(f[0] > 0.5 && f[1] > 0.5);
        assert_ne!(f[0], f[1]);
        assert_eq!(disturbance_force(&cfg, 8.0), f);
        assert_eq!(disturbance_force(&cfg, 8.39), f);
        assert_eq!(disturbance_force(&cfg, 8.4), [0.0, 0.0]);
        assert_ne!(disturbance_force(&cfg, 16.1), f);
    }

    #[test]
    fn gust_edges_are_smooth() {
        let cfg = DisturbanceConfig { a_p: 0.0, ..Default::default() };
        let peak = cfg.gust_magnitude(1, 0);
        assert_eq!(cfg.gust(8.0, 0), 0.0);
        assert!((cfg.gust(8.01, 0) - 0.5 * peak).abs() < 1e-9);
        assert_eq!(cfg.gust(8.2, 0), peak);
        assert!((cfg.gust(8.39, 0) - 0.5 * peak).abs() < 1e-9);
        // largest jump between 1 ms samples stays small
        let jump = (0..1000)
            .map(|i| 7.9 + i as f64 * 1e-3)
            .map(|t| (cfg.gust(t + 1e-3, 0) - cfg.gust(t, 0)).abs())
            .fold(0.0, f64::max);
        assert!(jump < 0.1 * peak, "jump {jump}");
    }

    #[test]
    fn gusts_reproducible_and_seeded() {
        let a = DisturbanceConfig { seed: 3, ..Default::default() };
        let b = DisturbanceConfig { seed: 4, ..Default::default() };
        let ts: Vec<f64> = (0..4000).map(|i| i as f64 * 0.01).collect();
        let fa: Vec<_> = ts.iter().map(|t| disturbance_force(&a, *t)).collect();
        let fa2: Vec<_> = ts.iter().map(|t| disturbance_force(&a, *t)).collect();
        let fb: Vec<_> = ts.iter().map(|t| disturbance_force(&b, *t)).collect();
        assert_eq!(fa, fa2);
        assert_ne!(fa, fb);
    }

    #[test]
    fn gust_statistics() {
        let cfg = DisturbanceConfig::default();
        let n = 20000;
        let draws: Vec<f64> = (1..=n).map(|k| cfg.gust_magnitude(k, (k % 2) as usize)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 1.0).abs() < 0.005);
        assert!((var.sqrt() - 0.1).abs() < 0.005);
    }

    #[test]
    fn validate_rejects_bad_values() {
        assert!(DisturbanceConfig::default().validate().is_ok());
        assert!(DisturbanceConfig { f_p: 0.0, ..Default::default() }.validate().is_err());
        assert!(DisturbanceConfig { a_r_std: -1.0, ..Default::default() }.validate().is_err());
        assert!(DisturbanceConfig { t_edge: 0.3, ..Default::default() }.validate().is_err());
    }
}
