use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::depth::{CameraIntrinsics, SceneConfig};
use crate::ekf::{InitialSpread, ProcessNoise};
use crate::error::{Error, Result};
use crate::prior::GateConfig;
use crate::sim::{
    DisturbanceConfig, ImuNoiseConfig, RigGeometry, SimConfig, TrajectoryConfig, VisualNoiseConfig, WingDynamics,
    GRAVITY,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "fixed")]
    Fixed,
    #[serde(rename = "visual+prior")]
    VisualPrior,
    #[serde(rename = "imu+prior")]
    ImuPrior,
    #[serde(rename = "full")]
    Full,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Fixed, Mode::VisualPrior, Mode::ImuPrior, Mode::Full];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Fixed => "fixed",
            Mode::VisualPrior => "visual+prior",
            Mode::ImuPrior => "imu+prior",
            Mode::Full => "full",
        }
    }

    pub fn uses_filter(&self) -> bool {
        matches!(self, Mode::ImuPrior | Mode::Full)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode `{s}` (fixed, visual+prior, imu+prior, full)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorSettings {
    /// Variance inflation applied to the calibrated prior.
    pub inflation: f64,
    /// Length of the separate calibration flight, s.
    pub calibration_duration: f64,
}

impl Default for PriorSettings {
    fn default() -> Self {
        Self { inflation: 1.10, calibration_duration: 60.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterSettings {
    /// Rate random-walk spectral density, (rad/s)²/s.
    pub rate_noise: f64,
    /// Specific-force random-walk spectral density, (m/s²)²/s.
    pub accel_noise: f64,
    pub initial: InitialSpread,
    /// Lower bound on IMU measurement variances handed to the filter.
    pub variance_floor: f64,
    /// Feed the filter the mean of each IMU reading and its predecessor, so
    /// the zeroth-order prediction integrates with the trapezoid rule.
    pub average_imu: bool,
}

impl Default for FilterSettings {
    fn default() -> Self {
        Self { rate_noise: 0.1, accel_noise: 10.0, initial: InitialSpread::default(), variance_floor: 1e-12, average_imu: true }
    }
}

impl FilterSettings {
    pub fn process_noise(&self) -> ProcessNoise {
        ProcessNoise::isotropic(self.rate_noise, self.accel_noise)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DepthSettings {
    pub camera: CameraIntrinsics,
    pub scene: SceneConfig,
    /// Evaluate every n-th pixel in each direction.
    pub pixel_stride: usize,
    /// Evaluate every n-th vision frame.
    pub frame_stride: usize,
    /// Largest vertical misalignment a matcher tolerates, px.
    pub v_thresh: f64,
}

impl Default for DepthSettings {
    fn default() -> Self {
        Self {
            camera: CameraIntrinsics::default(),
            scene: SceneConfig::default(),
            pixel_stride: 4,
            frame_stride: 10,
            v_thresh: 1.0,
        }
    }
}

/// Everything needed for one experiment. Parsed from TOML with dotted keys
/// (`disturbance.a_p = 0.25`); every key is optional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// s
    pub duration: f64,
    pub seed: u64,
    pub mode: Mode,
    /// Leading interval excluded from error statistics, s.
    pub warmup: f64,
    /// Seeds per configuration for multi-run statistics.
    pub runs: usize,
    /// Noise multipliers for the sweep.
    pub multipliers: Vec<f64>,
    pub wing_substeps: usize,
    pub disturbance: DisturbanceConfig,
    pub imu: ImuNoiseConfig,
    pub visual: VisualNoiseConfig,
    pub geometry: RigGeometry,
    pub wing: WingDynamics,
    pub trajectory: TrajectoryConfig,
    pub gate: GateConfig,
    pub prior: PriorSettings,
    pub filter: FilterSettings,
    pub depth: DepthSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let sim = SimConfig::default();
        Self {
            duration: sim.duration,
            seed: 1,
            mode: Mode::Full,
            warmup: 5.0,
            runs: 5,
            multipliers: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
            wing_substeps: sim.wing_substeps,
            disturbance: sim.disturbance,
            imu: sim.imu,
            visual: sim.visual,
            geometry: sim.geometry,
            wing: sim.wing,
            trajectory: sim.trajectory,
            gate: GateConfig::default(),
            prior: PriorSettings::default(),
            filter: FilterSettings::default(),
            depth: DepthSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::parse(path, m),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.warmup >= 0.0) || !self.warmup.is_finite() {
            return Err(Error::Config("warmup must be >= 0".into()));
        }
        if !(self.duration > self.warmup) {
            return Err(Error::Config(format!(
                "duration {} s leaves nothing after the {} s warm-up",
                self.duration, self.warmup
            )));
        }
        if self.visual.rate > self.imu.rate {
            return Err(Error::Config("vision rate must not exceed the IMU rate".into()));
        }
        if self.multipliers.iter().any(|m| !(*m >= 1.0) || !m.is_finite()) {
            return Err(Error::Config("noise multipliers must be >= 1".into()));
        }
        if !(self.gate.k > 0.0) {
            return Err(Error::Config("gate.k must be > 0".into()));
        }
        if !(self.prior.inflation >= 1.0) || !(self.prior.calibration_duration > 0.0) {
            return Err(Error::Config("prior.inflation must be >= 1 and calibration_duration > 0".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be >= 1".into()));
        }
        self.filter.process_noise().validate()?;
        if !(self.filter.variance_floor > 0.0) {
            return Err(Error::Config("filter.variance_floor must be > 0".into()));
        }
        if self.depth.pixel_stride == 0 || self.depth.frame_stride == 0 || !(self.depth.v_thresh > 0.0) {
            return Err(Error::Config("depth strides must be >= 1 and v_thresh > 0".into()));
        }
        self.depth.camera.validate()?;
        self.depth.scene.validate()?;
        self.sim_config(self.seed).validate()
    }

    /// Flight simulation for one run; `seed` drives both gusts and sensor noise.
    pub fn sim_config(&self, seed: u64) -> SimConfig {
        SimConfig {
            duration: self.duration,
            wing_substeps: self.wing_substeps,
            trajectory: self.trajectory,
            disturbance: self.disturbance,
            wing: self.wing,
            geometry: self.geometry,
            imu: self.imu,
            visual: self.visual,
            gravity: GRAVITY,
            seed,
        }
        .with_seed(seed)
    }

    /// Separate flight used only to calibrate the wing prior.
    pub fn calibration_config(&self, seed: u64) -> SimConfig {
        SimConfig { duration: self.prior.calibration_duration, ..self.sim_config(seed) }
            .with_seed(seed ^ CALIBRATION_SEED_MASK)
    }
}

const CALIBRATION_SEED_MASK: u64 = 0x9e37_79b9_7f4a_7c15;
