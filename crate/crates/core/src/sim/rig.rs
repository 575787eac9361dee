//! Kinematic chain from the aircraft body to each wing-mounted camera/IMU
//! rig: root offset, roll joint, span offset, pitch joint, mount offset,
//! toe-in. The left wing is rig 1, the right wing rig 2 (mirrored in y).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{RelativePose, UnitQuaternion, Vec3};
use crate::sim::trajectory::BodyState;
use crate::sim::wing::WingMotion;

/// Left-wing geometry in body axes; the right wing mirrors y.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RigGeometry {
    /// Body origin to roll joint, m.
    pub root: Vec3,
    /// Roll joint to pitch joint, m.
    pub root_to_mid: Vec3,
    /// Pitch joint to rig origin, m.
    pub mid_to_mount: Vec3,
    /// Inward yaw of each rig, rad.
    pub toe_in: f64,
    /// Tilt of the roll-joint axis towards body z, rad. Couples relative
    /// yaw to relative roll by `tan(hinge_tilt)`.
    pub hinge_tilt: f64,
}

impl Default for RigGeometry {
    fn default() -> Self {
        Self {
            root: Vec3::new(0.0, 0.15, 0.0),
            root_to_mid: Vec3::new(0.0, 0.75, 0.0),
            mid_to_mount: Vec3::new(0.0, 0.6, 0.05),
            toe_in: 8f64.to_radians(),
            hinge_tilt: 0.39f64.to_radians(),
        }
    }
}

impl RigGeometry {
    /// Nominal distance between the two rigs, m.
    pub fn baseline(&self) -> f64 {
        2.0 * (self.root.y + self.root_to_mid.y + self.mid_to_mount.y)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.root, self.root_to_mid, self.mid_to_mount].iter().all(|v| v.iter().all(|x| x.is_finite()));
        if !finite || !self.toe_in.is_finite() || !(self.hinge_tilt.abs() < 0.5) || !(self.baseline() > 0.0) {
            return Err(Error::Config("rig geometry must be finite, |hinge_tilt| < 0.5 rad, baseline positive".into()));
        }
        Ok(())
    }

    /// Relative pose with both wings undeflected.
    pub fn nominal(&self) -> RelativePose {
        let body = BodyState {
            position: Vec3::zeros(),
            velocity: Vec3::zeros(),
            acceleration: Vec3::zeros(),
            rotation: UnitQuaternion::identity(),
            omega: Vec3::zeros(),
            omega_dot: Vec3::zeros(),
        };
        rig_kinematics(&body, &[WingMotion::at_rest(); 2], self).relative
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigState {
    /// Rig to world.
    pub rotation: UnitQuaternion,
    pub position: Vec3,
    pub velocity: Vec3,
    /// Angular velocity in rig axes, rad/s.
    pub omega: Vec3,
    /// Kinematic acceleration in world axes, m/s².
    pub accel: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigKinematics {
    pub rigs: [RigState; 2],
    /// Pose of rig 2 in rig 1.
    pub relative: RelativePose,
}

impl RigKinematics {
    /// `R1ᵀ (V2 − V1)`
    pub fn relative_velocity(&self) -> Vec3 {
        let [r1, r2] = &self.rigs;
        r1.rotation.inverse().rotate(&(r2.velocity - r1.velocity))
    }
}

struct Link {
    rot: UnitQuaternion,
    pos: Vec3,
    vel: Vec3,
    acc: Vec3,
    /// world axes
    omega: Vec3,
    omega_dot: Vec3,
}

impl Link {
    /// Moves the reference point by `offset` given in the link's own axes.
    fn translate(&mut self, offset: &Vec3) {
        let r = self.rot.rotate(offset);
        let wr = self.omega.cross(&r);
        self.pos += r;
        self.vel += wr;
        self.acc += self.omega_dot.cross(&r) + self.omega.cross(&wr);
    }

    /// Revolute joint about `axis` (link axes) with angle, rate, acceleration.
    fn revolve(&mut self, axis: &Vec3, angle: f64, rate: f64, accel: f64) {
        let a = self.rot.rotate(axis);
        self.omega_dot += a * accel + self.omega.cross(&(a * rate));
        self.omega += a * rate;
        self.rot = self.rot * UnitQuaternion::from_axis_angle(axis, angle);
    }
}

fn mirror(v: &Vec3, sign: f64) -> Vec3 {
    Vec3::new(v.x, sign * v.y, v.z)
}

fn chain(body: &BodyState, wing: &WingMotion, geom: &RigGeometry, sign: f64) -> RigState {
    let mut link = Link {
        rot: body.rotation,
        pos: body.position,
        vel: body.velocity,
        acc: body.acceleration,
        omega: body.rotation.rotate(&body.omega),
        omega_dot: body.rotation.rotate(&body.omega_dot),
    };
    link.translate(&mirror(&geom.root, sign));
    let hinge = Vec3::new(geom.hinge_tilt.cos(), 0.0, geom.hinge_tilt.sin()) * sign;
    link.revolve(&hinge, wing.alpha, wing.alpha_dot, wing.alpha_ddot);
    link.translate(&mirror(&geom.root_to_mid, sign));
    link.revolve(&Vec3::y(), wing.beta, wing.beta_dot, wing.beta_ddot);
    link.translate(&mirror(&geom.mid_to_mount, sign));
    let rot = link.rot * UnitQuaternion::from_axis_angle(&Vec3::z(), -sign * geom.toe_in);
    RigState {
        rotation: rot,
        position: link.pos,
        velocity: link.vel,
        omega: rot.inverse().rotate(&link.omega),
        accel: link.acc,
    }
}

/// World motion of both rigs and their relative pose. `wings` is
/// `[left, right]`; a positive roll angle raises the tip on either side.
pub fn rig_kinematics(body: &BodyState, wings: &[WingMotion; 2], geom: &RigGeometry) -> RigKinematics {
    let r1 = chain(body, &wings[0], geom, 1.0);
    let r2 = chain(body, &wings[1], geom, -1.0);
    let inv1 = r1.rotation.inverse();
    let relative = RelativePose::new(inv1 * r2.rotation, inv1.rotate(&(r2.position - r1.position)));
    RigKinematics { rigs: [r1, r2], relative }
}
