//! Deterministic flight simulation: flexible wings, aircraft trajectory,
//! ground-truth relative pose and synthetic IMU and vision streams.

pub mod disturbance;
pub mod imu;
pub mod rig;
pub mod stream;
pub mod trajectory;
pub mod visual;
pub mod wing;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ekf::ImuPair;
use crate::error::{Error, Result};
use crate::geometry::{RelativePose, Vec3};
use crate::prior::VisualMeasurement;

pub use disturbance::{disturbance_force, DisturbanceConfig};
pub use imu::{specific_force, synth_imu, ImuNoiseConfig, GRAVITY};
pub use rig::{rig_kinematics, RigGeometry, RigKinematics, RigState};
pub use stream::{read_stream, write_stream, StreamRecord};
pub use trajectory::{body_trajectory, BodyState, TrajectoryConfig};
pub use visual::{synth_visual, VisualNoiseConfig};
pub use wing::{step_wing_dynamics, JointParams, WingDynamics, WingJointState, WingMotion};

const IMU_STREAM: u64 = 1;
const VISION_STREAM: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// s
    pub duration: f64,
    /// Wing integration substeps per IMU sample.
    pub wing_substeps: usize,
    pub trajectory: TrajectoryConfig,
    pub disturbance: DisturbanceConfig,
    pub wing: WingDynamics,
    pub geometry: RigGeometry,
    pub imu: ImuNoiseConfig,
    pub visual: VisualNoiseConfig,
    pub gravity: Vec3,
    /// Seeds sensor noise; gusts use `disturbance.seed`.
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            duration: 60.0,
            wing_substeps: 10,
            trajectory: TrajectoryConfig::default(),
            disturbance: DisturbanceConfig::default(),
            wing: WingDynamics::default(),
            geometry: RigGeometry::default(),
            imu: ImuNoiseConfig::default(),
            visual: VisualNoiseConfig::default(),
            gravity: GRAVITY,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// Sets both the sensor-noise and the gust seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.disturbance.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::Config("duration must be > 0".into()));
        }
        self.trajectory.validate()?;
        self.disturbance.validate()?;
        self.wing.validate()?;
        self.geometry.validate()?;
        self.imu.validate()?;
        self.visual.validate()?;
        self.vision_interval()?;
        if self.wing_substeps == 0 || 1.0 / (self.imu.rate * self.wing_substeps as f64) > wing::MAX_WING_STEP * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "wing substep 1/({} Hz * {}) exceeds {} s",
                self.imu.rate,
                self.wing_substeps,
                wing::MAX_WING_STEP
            )));
        }
        Ok(())
    }

    /// IMU samples per vision frame.
    pub fn vision_interval(&self) -> Result<usize> {
        let ratio = self.imu.rate / self.visual.rate;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "IMU rate {} Hz must be an integer multiple of vision rate {} Hz",
                self.imu.rate, self.visual.rate
            )));
        }
        Ok(n as usize)
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.imu.rate
    }
}

/// Ground truth at one IMU epoch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSample {
    pub t: f64,
    /// Pose of rig 2 in rig 1.
    pub truth: RelativePose,
    pub rigs: [RigState; 2],
    /// `[left, right]`
    pub wings: [WingJointState; 2],
    /// Tip forces applied from this epoch on, N.
    pub forces: [f64; 2],
}

/// Aligned per-epoch streams; `vision[i]` is set on vision epochs only.
#[derive(Clone, Debug, PartialEq)]
pub struct SimStream {
    pub samples: Vec<SimSample>,
    pub imu: Vec<ImuPair>,
    pub vision: Vec<Option<VisualMeasurement>>,
}

impl SimStream {
    pub fn records(&self) -> Vec<StreamRecord> {
        self.samples
            .iter()
            .zip(&self.imu)
            .zip(&self.vision)
            .map(|((s, imu), vision)| StreamRecord { t: s.t, truth: s.truth, imu: *imu, vision: *vision })
            .collect()
    }
}

/// Rig kinematics for a sample, with joint accelerations from the dynamics.
pub fn sample_kinematics(cfg: &SimConfig, sample: &SimSample) -> RigKinematics {
    let body = body_trajectory(sample.t, &cfg.trajectory);
    let motions = [
        cfg.wing.motion(&sample.wings[0], sample.forces[0]),
        cfg.wing.motion(&sample.wings[1], sample.forces[1]),
    ];
    rig_kinematics(&body, &motions, &cfg.geometry)
}

/// Runs the simulation from wings at rest at `t = 0` for `duration` seconds.
pub fn simulate(cfg: &SimConfig) -> Result<SimStream> {
    cfg.validate()?;
    let dt = cfg.dt();
    let n = (cfg.duration * cfg.imu.rate).round() as usize;
    let every = cfg.vision_interval()?;
    let h = dt / cfg.wing_substeps as f64;

    let mut imu_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    imu_rng.set_stream(IMU_STREAM);
    let mut vis_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    vis_rng.set_stream(VISION_STREAM);

    let mut out = SimStream {
        samples: Vec::with_capacity(n + 1),
        imu: Vec::with_capacity(n + 1),
        vision: Vec::with_capacity(n + 1),
    };
    let mut wings = [WingJointState::default(); 2];
    for k in 0..=n {
        let t = k as f64 * dt;
        let forces = disturbance_force(&cfg.disturbance, t);
        let sample = SimSample { t, truth: RelativePose::default(), rigs: [dummy_rig(); 2], wings, forces };
        let kin = sample_kinematics(cfg, &sample);
        let sample = SimSample { truth: kin.relative, rigs: kin.rigs, ..sample };
        out.imu.push(synth_imu(t, &kin, &cfg.gravity, &cfg.imu, &mut imu_rng));
        out.vision.push((k % every == 0).then(|| synth_visual(&kin.relative, &cfg.visual, &mut vis_rng)));
        out.samples.push(sample);

        if k == n {
            break;
        }
        for j in 0..cfg.wing_substeps {
            let ts = t + j as f64 * h;
            let f = disturbance_force(&cfg.disturbance, ts);
            for (side, w) in wings.iter_mut().enumerate() {
                *w = step_wing_dynamics(w, &cfg.wing, f[side], h).map_err(|e| match e {
                    Error::EnvelopeExceeded { joint, angle } => Error::EnvelopeExceeded {
                        joint: format!("{} {joint}", if side == 0 { "left" } else { "right" }),
                        angle,
                    },
                    other => other,
                })?;
            }
        }
    }
    Ok(out)
}

fn dummy_rig() -> RigState {
    RigState {
        rotation: Default::default(),
        position: Vec3::zeros(),
        velocity: Vec3::zeros(),
        omega: Vec3::zeros(),
        accel: Vec3::zeros(),
    }
}
