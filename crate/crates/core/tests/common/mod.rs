//! Reference computations shared by the integration tests. Everything here
//! is written against nalgebra's own quaternion type or plain loops, not the
//! crate's geometry helpers.

#![allow(dead_code)]

pub mod checks;

use nalgebra::{Matrix3, Quaternion, SMatrix, SVector, Vector3, Vector6};
use rand::Rng;

use flexstereo::depth::DepthMap;
use flexstereo::ekf::{error_injection, state_derivative, CovMatrix, ErrorState, FilterState, STATE_DIM};
use flexstereo::geometry::{UnitQuaternion, Vec3};
use flexstereo::prior::{VisualMeasurement, WingPrior};
use flexstereo::sim::{body_trajectory, rig_kinematics, step_wing_dynamics, SimConfig, SimSample};

pub fn na_quat(q: &UnitQuaternion) -> Quaternion<f64> {
    Quaternion::new(q.w(), q.x(), q.y(), q.z())
}

fn raw(v: &nalgebra::Vector4<f64>) -> Quaternion<f64> {
    Quaternion::new(v[0], v[1], v[2], v[3])
}

/// Rotation vector of a unit quaternion via nalgebra.
pub fn rotation_vector(q: &Quaternion<f64>) -> Vector3<f64> {
    nalgebra::UnitQuaternion::from_quaternion(*q).scaled_axis()
}

pub fn random_vec(rng: &mut impl Rng, scale: f64) -> Vec3 {
    Vec3::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

pub fn random_quat(rng: &mut impl Rng) -> UnitQuaternion {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n2: f64 = v.iter().map(|c| c * c).sum();
        if n2 > 0.01 && n2 <= 1.0 {
            return UnitQuaternion::new_normalize(v[0], v[1], v[2], v[3]);
        }
    }
}

pub fn random_state(rng: &mut impl Rng) -> FilterState {
    FilterState {
        q: random_quat(rng),
        w1: random_vec(rng, 2.0),
        w2: random_vec(rng, 2.0),
        p: random_vec(rng, 3.0),
        v: random_vec(rng, 1.0),
        a1: random_vec(rng, 12.0),
        a2: random_vec(rng, 12.0),
    }
}

/// Instantaneous rate of the error between a perturbed state and the nominal
/// one, both evolving under the noise-free process model. The rotation part
/// is `2·vec(d/dt(q̂* ⊗ q))`, exact to third order in the error.
pub fn error_rate(nominal: &FilterState, truth: &FilterState) -> SVector<f64, STATE_DIM> {
    let dn = state_derivative(nominal);
    let dt = state_derivative(truth);
    let qn = na_quat(&nominal.q);
    let qt = na_quat(&truth.q);
    let dq = raw(&dn.q_dot).conjugate() * qt + qn.conjugate() * raw(&dt.q_dot);
    let sign = (qn.conjugate() * qt).w.signum();
    let mut g = SVector::<f64, STATE_DIM>::zeros();
    g.fixed_rows_mut::<3>(0).copy_from(&(dq.imag() * (2.0 * sign)));
    g.fixed_rows_mut::<3>(9).copy_from(&(dt.p - dn.p));
    g.fixed_rows_mut::<3>(12).copy_from(&(dt.v - dn.v));
    g
}

/// Central-difference Jacobian of [`error_rate`] with respect to the error.
pub fn fd_error_jacobian(x: &FilterState, h: f64) -> CovMatrix {
    let mut f = CovMatrix::zeros();
    for j in 0..STATE_DIM {
        let mut e = SVector::<f64, STATE_DIM>::zeros();
        e[j] = h;
        let plus = error_rate(x, &error_injection(x, &ErrorState(e)));
        let minus = error_rate(x, &error_injection(x, &ErrorState(-e)));
        f.set_column(j, &((plus - minus) / (2.0 * h)));
    }
    f
}

/// `max |A − B| / max(|B|, 1)` entrywise.
pub fn max_rel_err<const R: usize, const C: usize>(a: &SMatrix<f64, R, C>, b: &SMatrix<f64, R, C>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs() / y.abs().max(1.0)).fold(0.0, f64::max)
}

/// Product of two diagonal Gaussians in deviation space, one axis at a
/// time: precision adds, the mean is precision-weighted. Returns the fused
/// mean and variances given the prior variances (mean zero) and the visual
/// deviation with its variances.
pub fn information_fusion(var_c: &Vector6<f64>, mu_v: &Vector6<f64>, var_v: &Vector6<f64>) -> (Vector6<f64>, Vector6<f64>) {
    let mut mu = Vector6::zeros();
    let mut var = Vector6::zeros();
    for i in 0..6 {
        let info = 1.0 / var_c[i] + 1.0 / var_v[i];
        var[i] = 1.0 / info;
        mu[i] = var[i] * (mu_v[i] / var_v[i]);
    }
    (mu, var)
}

/// Visual deviation from the prior mean, via nalgebra.
pub fn visual_deviation_ref(prior: &WingPrior, m: &VisualMeasurement) -> Vector6<f64> {
    let th = rotation_vector(&(na_quat(&prior.q_mu).conjugate() * na_quat(&m.q)));
    let p = m.dir * (prior.p_mu.norm() / m.dir.norm()) - prior.p_mu;
    Vector6::new(th.x, th.y, th.z, p.x, p.y, p.z)
}

pub fn pose_deviation_ref(prior: &WingPrior, q: &UnitQuaternion, p: &Vec3) -> Vector6<f64> {
    let th = rotation_vector(&(na_quat(&prior.q_mu).conjugate() * na_quat(q)));
    let d = p - prior.p_mu;
    Vector6::new(th.x, th.y, th.z, d.x, d.y, d.z)
}

/// Δ# by explicit row and column loops.
pub fn naive_completeness(d: &DepthMap, e: &DepthMap) -> f64 {
    let (mut valid, mut lost) = (0usize, 0usize);
    for i in 0..d.height() {
        for j in 0..d.width() {
            if d.get(i, j).is_some() {
                valid += 1;
                if e.get(i, j).is_none() {
                    lost += 1;
                }
            }
        }
    }
    lost as f64 / valid as f64
}

/// Δz by explicit row and column loops.
pub fn naive_accuracy(d: &DepthMap, e: &DepthMap) -> f64 {
    let (mut n, mut sum) = (0usize, 0.0);
    for i in 0..d.height() {
        for j in 0..d.width() {
            if let (Some(a), Some(b)) = (d.get(i, j), e.get(i, j)) {
                n += 1;
                sum += (a - b) * (a - b);
            }
        }
    }
    (sum / n as f64).sqrt()
}

pub fn random_depth_map(rng: &mut impl Rng, n: usize, invalid: f64) -> DepthMap {
    let depth = (0..n * n)
        .map(|_| if rng.random_bool(invalid) { f64::NAN } else { rng.random_range(1.0..300.0) })
        .collect();
    DepthMap::from_depths(n, n, 1, depth).unwrap()
}

/// Relative velocity `R1ᵀ(V2 − V1)` a time `tau` after `sample`, with the
/// wings advanced by fine RK4 steps under the sample's forces.
pub fn relative_velocity_after(cfg: &SimConfig, sample: &SimSample, tau: f64) -> Vec3 {
    let mut wings = sample.wings;
    if tau > 0.0 {
        let steps = 4;
        for (w, f) in wings.iter_mut().zip(sample.forces) {
            for _ in 0..steps {
                *w = step_wing_dynamics(w, &cfg.wing, f, tau / steps as f64).unwrap();
            }
        }
    }
    let body = body_trajectory(sample.t + tau, &cfg.trajectory);
    let motions = [cfg.wing.motion(&wings[0], sample.forces[0]), cfg.wing.motion(&wings[1], sample.forces[1])];
    rig_kinematics(&body, &motions, &cfg.geometry).relative_velocity()
}

/// Second-order one-sided difference `(−3v₀ + 4v₁ − v₂) / 2h` of the
/// relative velocity.
pub fn numeric_relative_accel(cfg: &SimConfig, sample: &SimSample, h: f64) -> Vec3 {
    let v0 = relative_velocity_after(cfg, sample, 0.0);
    let v1 = relative_velocity_after(cfg, sample, h);
    let v2 = relative_velocity_after(cfg, sample, 2.0 * h);
    (v1 * 4.0 - v0 * 3.0 - v2) / (2.0 * h)
}

pub fn is_symmetric_psd(m: &Matrix3<f64>) -> bool {
    (m - m.transpose()).amax() < 1e-12 && m.symmetric_eigenvalues().iter().all(|&l| l >= -1e-12)
}
