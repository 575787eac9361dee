//! Error-state EKF for the relative pose between two IMU rigs.
//!
//! Nominal state (22 scalars): relative orientation `q` (frame 2 in frame 1),
//! body rates `ω1`, `ω2`, relative position `p` and velocity `v` (both in
//! frame 1), and accelerometer specific forces `a1`, `a2` in each IMU frame.
//! Gravity cancels in `v̇ = C·a2 − a1 − ⌊ω1×⌋v`, so no world frame enters.
//!
//! Error state (21 scalars), always in this block order:
//! `[δθ, Δω1, Δω2, Δp, Δv, Δa1, Δa2]`. The rotation error is
//! right-multiplicative, `q = q̂ ⊗ exp(δθ)`; all other blocks are additive.

use nalgebra::{Matrix6, SMatrix, SVector, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hamilton, pure, skew, small_angle_to_quat, Mat3, RelativePose, UnitQuaternion, Vec3};
use crate::prior::WingPrior;

pub const STATE_DIM: usize = 21;
pub const NOISE_DIM: usize = 12;

pub type CovMatrix = SMatrix<f64, STATE_DIM, STATE_DIM>;
pub type NoiseMatrix = SMatrix<f64, STATE_DIM, NOISE_DIM>;

/// Offsets of the 3-blocks inside the error state.
pub mod block {
    pub const THETA: usize = 0;
    pub const W1: usize = 3;
    pub const W2: usize = 6;
    pub const P: usize = 9;
    pub const V: usize = 12;
    pub const A1: usize = 15;
    pub const A2: usize = 18;
}

/// Rates above this many radians per step break the zeroth-order integrator.
pub const MAX_ROTATION_PER_STEP: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterState {
    pub q: UnitQuaternion,
    pub w1: Vec3,
    pub w2: Vec3,
    pub p: Vec3,
    pub v: Vec3,
    pub a1: Vec3,
    pub a2: Vec3,
}

impl FilterState {
    /// Pose at `pose`, every kinematic block zero.
    pub fn at_rest(pose: &RelativePose) -> Self {
        Self {
            q: pose.rotation,
            w1: Vec3::zeros(),
            w2: Vec3::zeros(),
            p: pose.translation,
            v: Vec3::zeros(),
            a1: Vec3::zeros(),
            a2: Vec3::zeros(),
        }
    }

    pub fn pose(&self) -> RelativePose {
        RelativePose::new(self.q, self.p)
    }

    pub fn is_finite(&self) -> bool {
        self.q.to_array().iter().all(|c| c.is_finite())
            && [self.w1, self.w2, self.p, self.v, self.a1, self.a2]
                .iter()
                .all(|b| b.iter().all(|c| c.is_finite()))
    }
}

/// Time derivative of [`FilterState`]; `q_dot` is a raw (non-unit) quaternion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateDerivative {
    pub q_dot: Vector4<f64>,
    pub w1: Vec3,
    pub w2: Vec3,
    pub p: Vec3,
    pub v: Vec3,
    pub a1: Vec3,
    pub a2: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorState(pub SVector<f64, STATE_DIM>);

impl ErrorState {
    pub fn zeros() -> Self {
        Self(SVector::zeros())
    }

    pub fn from_blocks(theta: Vec3, w1: Vec3, w2: Vec3, p: Vec3, v: Vec3, a1: Vec3, a2: Vec3) -> Self {
        let mut e = SVector::<f64, STATE_DIM>::zeros();
        for (offset, b) in [
            (block::THETA, theta),
            (block::W1, w1),
            (block::W2, w2),
            (block::P, p),
            (block::V, v),
            (block::A1, a1),
            (block::A2, a2),
        ] {
            e.fixed_rows_mut::<3>(offset).copy_from(&b);
        }
        Self(e)
    }

    pub fn block(&self, offset: usize) -> Vec3 {
        self.0.fixed_rows::<3>(offset).into_owned()
    }

    pub fn theta(&self) -> Vec3 {
        self.block(block::THETA)
    }
}

/// Symmetric 21×21 error covariance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateCovariance(CovMatrix);

impl StateCovariance {
    /// Symmetrizes the input.
    pub fn new(m: CovMatrix) -> Self {
        Self((m + m.transpose()) * 0.5)
    }

    pub fn from_diagonal(d: &SVector<f64, STATE_DIM>) -> Self {
        Self(CovMatrix::from_diagonal(d))
    }

    pub fn matrix(&self) -> &CovMatrix {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn max_asymmetry(&self) -> f64 {
        (self.0 - self.0.transpose()).amax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.0.symmetric_eigenvalues().min()
    }

    /// 3×3 diagonal block at `offset`.
    pub fn block(&self, offset: usize) -> Mat3 {
        self.0.fixed_view::<3, 3>(offset, offset).into_owned()
    }
}

/// Standard deviations of the random-walk drivers `n_ω1, n_ω2, n_a1, n_a2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessNoise {
    pub w1: Vec3,
    pub w2: Vec3,
    pub a1: Vec3,
    pub a2: Vec3,
}

impl ProcessNoise {
    pub fn isotropic(rate: f64, accel: f64) -> Self {
        Self {
            w1: Vec3::repeat(rate),
            w2: Vec3::repeat(rate),
            a1: Vec3::repeat(accel),
            a2: Vec3::repeat(accel),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.w1, self.w2, self.a1, self.a2]
            .iter()
            .all(|b| b.iter().all(|s| s.is_finite() && *s > 0.0));
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("process noise std-devs must be positive".into()))
        }
    }

    /// `Q_c = diag([σ²_ω1, σ²_ω2, σ²_a1, σ²_a2])`
    pub fn continuous_covariance(&self) -> SMatrix<f64, NOISE_DIM, NOISE_DIM> {
        let mut d = SVector::<f64, NOISE_DIM>::zeros();
        for (i, b) in [self.w1, self.w2, self.a1, self.a2].iter().enumerate() {
            d.fixed_rows_mut::<3>(3 * i).copy_from(&b.component_mul(b));
        }
        SMatrix::from_diagonal(&d)
    }
}

/// Synchronized readings of both IMUs with their (diagonal) noise variances,
/// ordered `[ω1, ω2, a1, a2]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImuPair {
    pub t: f64,
    pub w1: Vec3,
    pub w2: Vec3,
    pub a1: Vec3,
    pub a2: Vec3,
    pub variance: SVector<f64, NOISE_DIM>,
}

impl ImuPair {
    pub fn measurement(&self) -> SVector<f64, NOISE_DIM> {
        let mut z = SVector::<f64, NOISE_DIM>::zeros();
        for (i, b) in [self.w1, self.w2, self.a1, self.a2].iter().enumerate() {
            z.fixed_rows_mut::<3>(3 * i).copy_from(b);
        }
        z
    }

    /// Mean of this reading and the one before it, stamped at this one. The
    /// variance is kept at the single-sample value since neighbours share a
    /// sample.
    pub fn averaged_with(&self, previous: &ImuPair) -> ImuPair {
        ImuPair {
            t: self.t,
            w1: (previous.w1 + self.w1) * 0.5,
            w2: (previous.w2 + self.w2) * 0.5,
            a1: (previous.a1 + self.a1) * 0.5,
            a2: (previous.a2 + self.a2) * 0.5,
            variance: self.variance,
        }
    }
}

/// Pose measurement with covariance ordered `[δθ; Δp]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusedPoseMeasurement {
    pub q: UnitQuaternion,
    pub p: Vec3,
    pub cov: Matrix6<f64>,
}

impl FusedPoseMeasurement {
    pub fn pose(&self) -> RelativePose {
        RelativePose::new(self.q, self.p)
    }
}

pub fn state_derivative(x: &FilterState) -> StateDerivative {
    let q = x.q.to_vector4();
    let q_dot = (hamilton(&q, &pure(&x.w2)) - hamilton(&pure(&x.w1), &q)) * 0.5;
    let c = x.q.to_rotation_matrix();
    StateDerivative {
        q_dot,
        w1: Vec3::zeros(),
        w2: Vec3::zeros(),
        p: x.v - x.w1.cross(&x.p),
        v: c * x.a2 - x.a1 - x.w1.cross(&x.v),
        a1: Vec3::zeros(),
        a2: Vec3::zeros(),
    }
}

/// Linearized error dynamics `ẋ̃ = F_c·x̃ + G_c·n` around `x`.
pub fn continuous_jacobians(x: &FilterState) -> (CovMatrix, NoiseMatrix) {
    use block::*;
    let c = x.q.to_rotation_matrix();
    let i3 = Mat3::identity();
    let w1x = skew(&x.w1);
    let mut f = CovMatrix::zeros();
    let mut set = |r: usize, col: usize, m: Mat3| f.fixed_view_mut::<3, 3>(r, col).copy_from(&m);

    set(THETA, THETA, -skew(&x.w2));
    set(THETA, W1, -c.transpose());
    set(THETA, W2, i3);

    set(P, W1, skew(&x.p));
    set(P, P, -w1x);
    set(P, V, i3);

    set(V, THETA, -c * skew(&x.a2));
    set(V, W1, skew(&x.v));
    set(V, V, -w1x);
    set(V, A1, -i3);
    set(V, A2, c);

    let mut g = NoiseMatrix::zeros();
    for (i, offset) in [W1, W2, A1, A2].iter().enumerate() {
        g.fixed_view_mut::<3, 3>(*offset, 3 * i).copy_from(&i3);
    }
    (f, g)
}

/// `F_d = I + F_c·Δt`, `Q_d = Δt·F_d·G_c·Q_c·G_cᵀ·F_dᵀ`.
pub fn discretize(
    fc: &CovMatrix,
    gc: &NoiseMatrix,
    qc: &SMatrix<f64, NOISE_DIM, NOISE_DIM>,
    dt: f64,
) -> Result<(CovMatrix, CovMatrix)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let fd = CovMatrix::identity() + fc * dt;
    let fg = fd * gc;
    let qd = fg * qc * fg.transpose() * dt;
    Ok((fd, (qd + qd.transpose()) * 0.5))
}

/// Zeroth-order state prediction plus covariance propagation over `dt`.
pub fn predict(
    x: &FilterState,
    cov: &StateCovariance,
    noise: &ProcessNoise,
    dt: f64,
) -> Result<(FilterState, StateCovariance)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let worst = x.w1.norm().max(x.w2.norm()) * dt;
    if worst >= MAX_ROTATION_PER_STEP {
        return Err(Error::StepTooLarge(format!(
            "rates rotate {worst:.3} rad in one step of {dt} s; use a smaller step"
        )));
    }

    let d = state_derivative(x);
    let (fc, gc) = continuous_jacobians(x);
    let (fd, qd) = discretize(&fc, &gc, &noise.continuous_covariance(), dt)?;

    let next = FilterState {
        q: UnitQuaternion::from_vector4(&(x.q.to_vector4() + d.q_dot * dt)),
        p: x.p + d.p * dt,
        v: x.v + d.v * dt,
        ..*x
    };
    let p = fd * cov.matrix() * fd.transpose() + qd;
    Ok((next, StateCovariance::new(p)))
}

/// Applies an error-state correction to a nominal state.
pub fn error_injection(x: &FilterState, dx: &ErrorState) -> FilterState {
    FilterState {
        q: x.q * small_angle_to_quat(&dx.theta()),
        w1: x.w1 + dx.block(block::W1),
        w2: x.w2 + dx.block(block::W2),
        p: x.p + dx.block(block::P),
        v: x.v + dx.block(block::V),
        a1: x.a1 + dx.block(block::A1),
        a2: x.a2 + dx.block(block::A2),
    }
}

/// Joseph-form update for a linear observation of the error state.
fn kalman_update<const M: usize>(
    x: &FilterState,
    cov: &StateCovariance,
    h: &SMatrix<f64, M, STATE_DIM>,
    residual: &SVector<f64, M>,
    r: &SMatrix<f64, M, M>,
    what: &'static str,
) -> Result<(FilterState, StateCovariance)> {
    let p = cov.matrix();
    let pht = p * h.transpose();
    let s = h * pht + r;
    let s = (s + s.transpose()) * 0.5;
    let chol = s.cholesky().ok_or(Error::Singular(what))?;
    // K = P Hᵀ S⁻¹, solved as S Kᵀ = H P
    let k = chol.solve(&pht.transpose()).transpose();
    let dx = ErrorState(k * residual);
    if !dx.0.iter().all(|v| v.is_finite()) {
        return Err(Error::Singular(what));
    }
    let ikh = CovMatrix::identity() - k * h;
    let p_new = ikh * p * ikh.transpose() + k * r * k.transpose();
    Ok((error_injection(x, &dx), StateCovariance::new(p_new)))
}

/// Direct observation of the `ω1, ω2, a1, a2` blocks.
pub fn imu_update(x: &FilterState, cov: &StateCovariance, m: &ImuPair) -> Result<(FilterState, StateCovariance)> {
    if !m.variance.iter().all(|v| v.is_finite() && *v > 0.0) {
        return Err(Error::InvalidArgument("IMU variances must be positive".into()));
    }
    let mut h = SMatrix::<f64, NOISE_DIM, STATE_DIM>::zeros();
    for (i, offset) in [block::W1, block::W2, block::A1, block::A2].iter().enumerate() {
        h.fixed_view_mut::<3, 3>(3 * i, *offset).copy_from(&Mat3::identity());
    }
    let predicted = ImuPair { t: m.t, w1: x.w1, w2: x.w2, a1: x.a1, a2: x.a2, variance: m.variance }.measurement();
    let residual = m.measurement() - predicted;
    let r = SMatrix::from_diagonal(&m.variance);
    kalman_update(x, cov, &h, &residual, &r, "IMU innovation covariance")
}

/// Observation of the pose blocks `[δθ; Δp]` by a fused pose measurement.
pub fn pose_update(
    x: &FilterState,
    cov: &StateCovariance,
    m: &FusedPoseMeasurement,
) -> Result<(FilterState, StateCovariance)> {
    let mut h = SMatrix::<f64, 6, STATE_DIM>::zeros();
    h.fixed_view_mut::<3, 3>(0, block::THETA).copy_from(&Mat3::identity());
    h.fixed_view_mut::<3, 3>(3, block::P).copy_from(&Mat3::identity());
    let dtheta = (x.q.inverse() * m.q).log()?;
    let dp = m.p - x.p;
    let residual = SVector::<f64, 6>::from_iterator(dtheta.iter().chain(dp.iter()).copied());
    let r = (m.cov + m.cov.transpose()) * 0.5;
    kalman_update(x, cov, &h, &residual, &r, "pose innovation covariance")
}

/// Initial spread of the kinematic blocks, given as expected magnitudes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitialSpread {
    /// rad/s
    pub rate: f64,
    /// m/s
    pub velocity: f64,
    /// m/s²
    pub accel: f64,
}

impl Default for InitialSpread {
    fn default() -> Self {
        Self { rate: 1.0, velocity: 1.0, accel: 10.0 }
    }
}

/// Filter instance: nominal state, covariance and process noise.
#[derive(Clone, Debug)]
pub struct RelativeEkf {
    pub state: FilterState,
    pub cov: StateCovariance,
    pub noise: ProcessNoise,
}

impl RelativeEkf {
    /// Pose from the prior mean with the prior covariance on the pose blocks;
    /// rates, velocity and accelerations start at zero with variances of ten
    /// times the squared expected magnitudes.
    pub fn from_prior(prior: &WingPrior, spread: &InitialSpread, noise: ProcessNoise) -> Result<Self> {
        noise.validate()?;
        let mut d = SVector::<f64, STATE_DIM>::zeros();
        let sq = |v: Vec3| v.component_mul(&v);
        let fill = |d: &mut SVector<f64, STATE_DIM>, offset: usize, v: Vec3| d.fixed_rows_mut::<3>(offset).copy_from(&v);
        fill(&mut d, block::THETA, sq(prior.sigma_theta));
        fill(&mut d, block::P, sq(prior.sigma_p));
        let rate = Vec3::repeat(10.0 * spread.rate * spread.rate);
        let vel = Vec3::repeat(10.0 * spread.velocity * spread.velocity);
        let acc = Vec3::repeat(10.0 * spread.accel * spread.accel);
        fill(&mut d, block::W1, rate);
        fill(&mut d, block::W2, rate);
        fill(&mut d, block::V, vel);
        fill(&mut d, block::A1, acc);
        fill(&mut d, block::A2, acc);
        Ok(Self {
            state: FilterState::at_rest(&prior.mean()),
            cov: StateCovariance::from_diagonal(&d),
            noise,
        })
    }

    pub fn predict(&mut self, dt: f64) -> Result<()> {
        let (x, p) = predict(&self.state, &self.cov, &self.noise, dt)?;
        self.state = x;
        self.cov = p;
        Ok(())
    }

    pub fn update_imu(&mut self, m: &ImuPair) -> Result<()> {
        let (x, p) = imu_update(&self.state, &self.cov, m)?;
        self.state = x;
        self.cov = p;
        Ok(())
    }

    pub fn update_pose(&mut self, m: &FusedPoseMeasurement) -> Result<()> {
        let (x, p) = pose_update(&self.state, &self.cov, m)?;
        self.state = x;
        self.cov = p;
        Ok(())
    }
}
