//! Gaussian wing model: a nominal relative pose with independent per-axis
//! deviations, calibration from observed poses, fusion with visual relative
//! pose estimates, and outlier gating.
//!
//! Deviations from the nominal pose are `q = q_mu ⊗ exp(δθ)` and
//! `p = p_mu + Δp`, stacked as `[δθ; Δp]` everywhere a 6-vector appears.

use std::path::Path;

use nalgebra::{Matrix4, Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::ekf::FusedPoseMeasurement;
use crate::error::{Error, Result};
use crate::geometry::{small_angle_to_quat, RelativePose, UnitQuaternion, Vec3};

/// Lower bound applied to calibrated standard deviations (rad or m).
pub const SIGMA_FLOOR: f64 = 1e-6;

const MEAN_TOLERANCE: f64 = 1e-10;
const MEAN_MAX_ITERATIONS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WingPrior {
    pub q_mu: UnitQuaternion,
    /// m
    pub p_mu: Vec3,
    /// rad
    pub sigma_theta: Vec3,
    /// m
    pub sigma_p: Vec3,
}

/// Deviation of a pose from the prior mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoseDeviation {
    pub theta: Vec3,
    pub p: Vec3,
}

impl PoseDeviation {
    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.theta.x, self.theta.y, self.theta.z, self.p.x, self.p.y, self.p.z)
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self { theta: Vec3::new(v[0], v[1], v[2]), p: Vec3::new(v[3], v[4], v[5]) }
    }
}

impl WingPrior {
    pub fn new(mean: RelativePose, sigma_theta: Vec3, sigma_p: Vec3) -> Result<Self> {
        let prior = Self { q_mu: mean.rotation, p_mu: mean.translation, sigma_theta, sigma_p };
        prior.validate()?;
        Ok(prior)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma_theta.iter().chain(self.sigma_p.iter()).all(|s| s.is_finite() && *s > 0.0);
        if !ok {
            return Err(Error::InvalidArgument("prior standard deviations must be positive".into()));
        }
        if !self.p_mu.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("prior mean translation must be finite".into()));
        }
        Ok(())
    }

    pub fn mean(&self) -> RelativePose {
        RelativePose::new(self.q_mu, self.p_mu)
    }

    pub fn sigma(&self) -> Vector6<f64> {
        Vector6::new(
            self.sigma_theta.x,
            self.sigma_theta.y,
            self.sigma_theta.z,
            self.sigma_p.x,
            self.sigma_p.y,
            self.sigma_p.z,
        )
    }

    /// `Σ_c = diag([σ_δθ²; σ_Δp²])`
    pub fn covariance(&self) -> Matrix6<f64> {
        let s = self.sigma();
        Matrix6::from_diagonal(&s.component_mul(&s))
    }

    /// Multiplies every variance by `factor`.
    pub fn inflated(&self, factor: f64) -> Self {
        let k = factor.sqrt();
        Self { sigma_theta: self.sigma_theta * k, sigma_p: self.sigma_p * k, ..*self }
    }

    /// The prior itself as a pose measurement: mean pose with covariance `Σ_c`.
    pub fn as_measurement(&self) -> FusedPoseMeasurement {
        FusedPoseMeasurement { q: self.q_mu, p: self.p_mu, cov: self.covariance() }
    }

    /// Pose at the given deviation from the mean.
    pub fn compose(&self, dev: &PoseDeviation) -> RelativePose {
        RelativePose::new(self.q_mu * small_angle_to_quat(&dev.theta), self.p_mu + dev.p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(&PriorFile::from(self)).map_err(|e| Error::parse(path, e))?;
        let body = format!("# wing prior: mean pose (q_mu as w,x,y,z; p_mu in m), std-devs in rad and m\n{text}");
        std::fs::write(path, body).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(path, message),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: PriorFile = toml::from_str(text).map_err(|e| Error::parse("<prior>", e))?;
        let prior = WingPrior::from(file);
        prior.validate()?;
        Ok(prior)
    }
}

#[derive(Serialize, Deserialize)]
struct Xyz {
    x: f64,
    y: f64,
    z: f64,
}

#[derive(Serialize, Deserialize)]
struct Wxyz {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

/// On-disk layout, flat dotted keys (`q_mu.w = ...`).
#[derive(Serialize, Deserialize)]
struct PriorFile {
    q_mu: Wxyz,
    p_mu: Xyz,
    sigma_dtheta: Xyz,
    sigma_dp: Xyz,
}

impl From<&WingPrior> for PriorFile {
    fn from(p: &WingPrior) -> Self {
        let xyz = |v: Vec3| Xyz { x: v.x, y: v.y, z: v.z };
        let q = p.q_mu;
        PriorFile {
            q_mu: Wxyz { w: q.w(), x: q.x(), y: q.y(), z: q.z() },
            p_mu: xyz(p.p_mu),
            sigma_dtheta: xyz(p.sigma_theta),
            sigma_dp: xyz(p.sigma_p),
        }
    }
}

impl From<PriorFile> for WingPrior {
    fn from(f: PriorFile) -> Self {
        let v = |a: Xyz| Vec3::new(a.x, a.y, a.z);
        WingPrior {
            q_mu: UnitQuaternion::new_normalize(f.q_mu.w, f.q_mu.x, f.q_mu.y, f.q_mu.z),
            p_mu: v(f.p_mu),
            sigma_theta: v(f.sigma_dtheta),
            sigma_p: v(f.sigma_dp),
        }
    }
}

/// Visual relative pose: orientation plus unit direction of translation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisualMeasurement {
    pub q: UnitQuaternion,
    pub dir: Vec3,
    /// Covariance of `[δθ_v; Δp_v]`.
    pub cov: Matrix6<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateConfig {
    /// Allowed deviation in multiples of the visual standard deviation.
    pub k: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self { k: 2.0 }
    }
}

/// Output of [`gate`]: the measurement handed to the filter and whether the
/// visual estimate was replaced by the prior.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateDecision {
    pub measurement: FusedPoseMeasurement,
    pub rejected: bool,
}

/// Fits a [`WingPrior`] to observed relative poses.
///
/// The rotation mean is the tangent-space mean: starting from the chordal
/// (eigenvector) mean, deviations are re-linearized about the current mean
/// until their average vanishes. Standard deviations are unbiased, per axis,
/// and floored at [`SIGMA_FLOOR`].
pub fn calibrate_prior(samples: &[RelativePose]) -> Result<WingPrior> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "calibration needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;

    let mut scatter = Matrix4::<f64>::zeros();
    for s in samples {
        let v = s.rotation.to_vector4();
        scatter += v * v.transpose();
    }
    let eig = scatter.symmetric_eigen();
    let imax = eig.eigenvalues.imax();
    let mut q_mu = UnitQuaternion::from_vector4(&eig.eigenvectors.column(imax).into_owned()).canonical();

    for _ in 0..MEAN_MAX_ITERATIONS {
        let mut mean = Vec3::zeros();
        for s in samples {
            mean += (q_mu.inverse() * s.rotation).log()?;
        }
        mean /= n;
        q_mu = (q_mu * small_angle_to_quat(&mean)).canonical();
        if mean.norm() < MEAN_TOLERANCE {
            break;
        }
    }

    let p_mu = samples.iter().fold(Vec3::zeros(), |acc, s| acc + s.translation) / n;

    let mut var_theta = Vec3::zeros();
    let mut var_p = Vec3::zeros();
    for s in samples {
        let d = (q_mu.inverse() * s.rotation).log()?;
        var_theta += d.component_mul(&d);
        let dp = s.translation - p_mu;
        var_p += dp.component_mul(&dp);
    }
    let std = |v: Vec3| (v / (n - 1.0)).map(|x| x.sqrt().max(SIGMA_FLOOR));

    Ok(WingPrior { q_mu, p_mu, sigma_theta: std(var_theta), sigma_p: std(var_p) })
}

/// `δθ = log(q_mu⁻¹ ⊗ q)`, `Δp = p − p_mu`.
pub fn deviation(prior: &WingPrior, pose: &RelativePose) -> Result<PoseDeviation> {
    Ok(PoseDeviation {
        theta: (prior.q_mu.inverse() * pose.rotation).log()?,
        p: pose.translation - prior.p_mu,
    })
}

/// Deviation of a visual estimate from the prior mean. The direction of
/// translation carries no scale; it is resolved with the prior's baseline
/// length `‖p_mu‖`.
pub fn visual_deviation(prior: &WingPrior, m: &VisualMeasurement) -> Result<PoseDeviation> {
    let n = m.dir.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidArgument("visual translation direction must be non-zero".into()));
    }
    let p_v = m.dir * (prior.p_mu.norm() / n);
    deviation(prior, &RelativePose::new(m.q, p_v))
}

/// MAP combination of the prior with a visual estimate:
/// `x_f = Σ_c (Σ_c + Σ_v)⁻¹ x_v`, `Σ_f = Σ_c − Σ_c (Σ_c + Σ_v)⁻¹ Σ_c`.
pub fn fuse_with_prior(prior: &WingPrior, m: &VisualMeasurement) -> Result<FusedPoseMeasurement> {
    let dev = visual_deviation(prior, m)?;
    let sc = prior.covariance();
    let sum = sc + m.cov;
    let sum = (sum + sum.transpose()) * 0.5;
    let chol = sum.cholesky().ok_or(Error::Singular("prior plus visual covariance"))?;
    // Σ_c (Σ_c+Σ_v)⁻¹ = ((Σ_c+Σ_v)⁻¹ Σ_c)ᵀ for symmetric Σ_c
    let gain = chol.solve(&sc).transpose();
    let fused = PoseDeviation::from_vector(&(gain * dev.to_vector()));
    let cov = sc - gain * sc;
    let cov = (cov + cov.transpose()) * 0.5;
    let pose = prior.compose(&fused);
    Ok(FusedPoseMeasurement { q: pose.rotation, p: pose.translation, cov })
}

/// Per-axis outlier test `max_i δ_i² / Σ_v,ii > k²` on the visual deviation.
/// Rejected estimates, and estimates whose deviation is not representable,
/// are replaced by the prior itself so the filter always gets an update.
pub fn gate(prior: &WingPrior, m: &VisualMeasurement, cfg: &GateConfig) -> GateDecision {
    let rejected = GateDecision { measurement: prior.as_measurement(), rejected: true };
    let Ok(dev) = visual_deviation(prior, m) else {
        return rejected;
    };
    let d = dev.to_vector();
    let k2 = cfg.k * cfg.k;
    let exceeds = (0..6).any(|i| {
        let var = m.cov[(i, i)];
        let ratio = d[i] * d[i] / var;
        // zero deviation on a zero-variance axis is not an outlier
        !(ratio <= k2) && !(d[i] == 0.0 && var == 0.0)
    });
    if exceeds {
        return rejected;
    }
    match fuse_with_prior(prior, m) {
        Ok(measurement) => GateDecision { measurement, rejected: false },
        Err(_) => rejected,
    }
}
