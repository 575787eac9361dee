//! Lumped two-joint wing: a root roll joint and a mid-span pitch joint, each
//! a damped torsional spring driven by a point force at the tip.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest integration step accepted by [`step_wing_dynamics`], s.
pub const MAX_WING_STEP: f64 = 1e-3;

/// Joint angles outside `±ENVELOPE` invalidate the small-deflection model.
pub const ENVELOPE: f64 = FRAC_PI_4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WingJointState {
    /// rad
    pub alpha: f64,
    pub alpha_dot: f64,
    /// rad
    pub beta: f64,
    pub beta_dot: f64,
}

/// Joint state plus joint accelerations at one instant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WingMotion {
    pub alpha: f64,
    pub alpha_dot: f64,
    pub alpha_ddot: f64,
    pub beta: f64,
    pub beta_dot: f64,
    pub beta_ddot: f64,
}

impl WingMotion {
    /// Rigid wing at rest.
    pub fn at_rest() -> Self {
        Self::default()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointParams {
    /// kg m²
    pub inertia: f64,
    /// N m / rad
    pub stiffness: f64,
    /// N m s / rad
    pub damping: f64,
}

impl JointParams {
    pub fn natural_frequency(&self) -> f64 {
        (self.stiffness / self.inertia).sqrt()
    }

    pub fn damping_ratio(&self) -> f64 {
        self.damping / (2.0 * (self.stiffness * self.inertia).sqrt())
    }

    fn accel(&self, theta: f64, theta_dot: f64, torque: f64) -> f64 {
        (-self.stiffness * theta - self.damping * theta_dot + torque) / self.inertia
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WingDynamics {
    pub roll: JointParams,
    pub pitch: JointParams,
    /// Spanwise distance from the roll axis to the tip force, m.
    pub roll_arm: f64,
    /// Chordwise offset of the tip force from the pitch axis, m.
    pub pitch_arm: f64,
}

impl Default for WingDynamics {
    fn default() -> Self {
        Self {
            roll: JointParams { inertia: 0.15, stiffness: 52.0, damping: 0.5 },
            pitch: JointParams { inertia: 0.02, stiffness: 400.0, damping: 0.6 },
            roll_arm: 2.35,
            pitch_arm: 0.05,
        }
    }
}

impl WingDynamics {
    pub fn validate(&self) -> Result<()> {
        for (name, j) in [("roll", &self.roll), ("pitch", &self.pitch)] {
            let ok = [j.inertia, j.stiffness].iter().all(|v| v.is_finite() && *v > 0.0)
                && j.damping.is_finite()
                && j.damping >= 0.0;
            if !ok {
                return Err(Error::Config(format!("{name} joint needs inertia, stiffness > 0 and damping >= 0")));
            }
        }
        if !self.roll_arm.is_finite() || !self.pitch_arm.is_finite() {
            return Err(Error::Config("wing lever arms must be finite".into()));
        }
        Ok(())
    }

    /// Joint accelerations `(α̈, β̈)` under tip force `force`.
    pub fn acceleration(&self, s: &WingJointState, force: f64) -> (f64, f64) {
        (
            self.roll.accel(s.alpha, s.alpha_dot, force * self.roll_arm),
            self.pitch.accel(s.beta, s.beta_dot, force * self.pitch_arm),
        )
    }

    pub fn motion(&self, s: &WingJointState, force: f64) -> WingMotion {
        let (alpha_ddot, beta_ddot) = self.acceleration(s, force);
        WingMotion {
            alpha: s.alpha,
            alpha_dot: s.alpha_dot,
            alpha_ddot,
            beta: s.beta,
            beta_dot: s.beta_dot,
            beta_ddot,
        }
    }

    /// Static deflection `(α, β)` under a constant force.
    pub fn equilibrium(&self, force: f64) -> (f64, f64) {
        (force * self.roll_arm / self.roll.stiffness, force * self.pitch_arm / self.pitch.stiffness)
    }

    /// Spring plus kinetic energy, J.
    pub fn energy(&self, s: &WingJointState) -> f64 {
        0.5 * (self.roll.stiffness * s.alpha * s.alpha
            + self.roll.inertia * s.alpha_dot * s.alpha_dot
            + self.pitch.stiffness * s.beta * s.beta
            + self.pitch.inertia * s.beta_dot * s.beta_dot)
    }
}

fn derivative(d: &WingDynamics, s: &WingJointState, force: f64) -> WingJointState {
    let (a, b) = d.acceleration(s, force);
    WingJointState { alpha: s.alpha_dot, alpha_dot: a, beta: s.beta_dot, beta_dot: b }
}

fn axpy(s: &WingJointState, h: f64, k: &WingJointState) -> WingJointState {
    WingJointState {
        alpha: s.alpha + h * k.alpha,
        alpha_dot: s.alpha_dot + h * k.alpha_dot,
        beta: s.beta + h * k.beta,
        beta_dot: s.beta_dot + h * k.beta_dot,
    }
}

/// One classical RK4 step with the tip force held constant over the step.
/// `dt` may be negative (backward integration) but not larger than
/// [`MAX_WING_STEP`] in magnitude.
pub fn step_wing_dynamics(
    state: &WingJointState,
    dynamics: &WingDynamics,
    force: f64,
    dt: f64,
) -> Result<WingJointState> {
    if !(dt.abs() <= MAX_WING_STEP * (1.0 + 1e-12)) {
        return Err(Error::StepTooLarge(format!("wing step {dt} s exceeds {MAX_WING_STEP} s")));
    }
    let k1 = derivative(dynamics, state, force);
    let k2 = derivative(dynamics, &axpy(state, 0.5 * dt, &k1), force);
    let k3 = derivative(dynamics, &axpy(state, 0.5 * dt, &k2), force);
    let k4 = derivative(dynamics, &axpy(state, dt, &k3), force);
    let sum = WingJointState {
        alpha: k1.alpha + 2.0 * k2.alpha + 2.0 * k3.alpha + k4.alpha,
        alpha_dot: k1.alpha_dot + 2.0 * k2.alpha_dot + 2.0 * k3.alpha_dot + k4.alpha_dot,
        beta: k1.beta + 2.0 * k2.beta + 2.0 * k3.beta + k4.beta,
        beta_dot: k1.beta_dot + 2.0 * k2.beta_dot + 2.0 * k3.beta_dot + k4.beta_dot,
    };
    let next = axpy(state, dt / 6.0, &sum);
    for (joint, angle) in [("roll", next.alpha), ("pitch", next.beta)] {
        if !(angle.abs() < ENVELOPE) {
            return Err(Error::EnvelopeExceeded { joint: joint.into(), angle });
        }
    }
    Ok(next)
}
