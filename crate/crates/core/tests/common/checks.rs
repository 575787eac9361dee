//! Measurements behind the property criteria. Each returns the observed
//! statistic so callers can both assert and print it.

use nalgebra::{Matrix6, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flexstereo::depth::{accuracy_error, completeness_error, synth_depth_map, CameraIntrinsics};
use flexstereo::ekf::{continuous_jacobians, state_derivative, FilterState, RelativeEkf};
use flexstereo::geometry::{RelativePose, UnitQuaternion, Vec3};
use flexstereo::harness::{emit_report, prepare_run, run_experiment, ExperimentConfig};
use flexstereo::prior::{fuse_with_prior, gate, VisualMeasurement, WingPrior};
use flexstereo::sim::{sample_kinematics, simulate, ImuNoiseConfig, VisualNoiseConfig};

use super::*;

/// Largest relative entry error of `F_c` against finite differences.
pub fn jacobian_error(states: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..states)
        .map(|_| {
            let x = random_state(&mut rng);
            let (f, _) = continuous_jacobians(&x);
            max_rel_err(&f, &fd_error_jacobian(&x, 1e-6))
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy)]
pub struct Hygiene {
    pub cycles: usize,
    pub asymmetry: f64,
    /// `min eig / trace` of the final covariance.
    pub min_eig_ratio: f64,
    /// Worst `| ‖q‖ − 1 |` seen.
    pub q_drift: f64,
}

/// Runs the filter for `cycles` predict/update cycles on a simulated
/// flight, with a pose update on every vision epoch.
pub fn covariance_hygiene(cycles: usize, seed: u64) -> Hygiene {
    let mut cfg = ExperimentConfig::default();
    cfg.duration = cycles as f64 / cfg.imu.rate;
    cfg.seed = seed;
    let prep = prepare_run(&cfg, seed).unwrap();
    let prior = prep.prior.inflated(cfg.prior.inflation);
    let mut f = RelativeEkf::from_prior(&prior, &cfg.filter.initial, cfg.filter.process_noise()).unwrap();
    let mut out = Hygiene { cycles: 0, asymmetry: 0.0, min_eig_ratio: 0.0, q_drift: 0.0 };
    let mut last_t = None;
    for r in &prep.records[..cycles] {
        if let Some(t0) = last_t {
            f.predict(r.t - t0).unwrap();
        }
        last_t = Some(r.t);
        f.update_imu(&r.imu).unwrap();
        if let Some(v) = &r.vision {
            f.update_pose(&gate(&prior, v, &cfg.gate).measurement).unwrap();
        }
        out.cycles += 1;
        out.asymmetry = out.asymmetry.max(f.cov.max_asymmetry());
        out.q_drift = out.q_drift.max((f.state.q.norm() - 1.0).abs());
    }
    out.min_eig_ratio = f.cov.min_eigenvalue() / f.cov.trace();
    out
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

#[derive(Debug, Clone, Copy)]
pub struct FusionStats {
    pub max_err: f64,
    /// Cases whose fused variances exceed either input on some axis.
    pub diag_violations: usize,
}

/// `fuse_with_prior` against the per-axis Gaussian product on random
/// priors and diagonal visual covariances.
pub fn fusion_oracle(cases: usize, seed: u64) -> FusionStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = FusionStats { max_err: 0.0, diag_violations: 0 };
    for _ in 0..cases {
        let mean = RelativePose::new(random_quat(&mut rng), random_vec(&mut rng, 3.0) + Vec3::new(0.0, -3.0, 0.0));
        let sigma_theta = Vec3::from_fn(|_, _| log_uniform(&mut rng, 1e-4, 0.1));
        let sigma_p = Vec3::from_fn(|_, _| log_uniform(&mut rng, 1e-4, 0.1));
        let prior = WingPrior::new(mean, sigma_theta, sigma_p).unwrap();
        let sv = Vector6::from_fn(|_, _| log_uniform(&mut rng, 1e-4, 0.1));
        let th = Vec3::from_fn(|i, _| sv[i] * rng.random_range(-3.0..3.0));
        let dp = Vec3::from_fn(|i, _| sv[i + 3] * rng.random_range(-3.0..3.0));
        let q = prior.q_mu * UnitQuaternion::from_axis_angle(&th, th.norm());
        let m = VisualMeasurement { q, dir: (prior.p_mu + dp) * rng.random_range(0.2..5.0), cov: Matrix6::from_diagonal(&sv.component_mul(&sv)) };

        let var_c = prior.sigma().component_mul(&prior.sigma());
        let var_v = m.cov.diagonal();
        let (mu, var) = information_fusion(&var_c, &visual_deviation_ref(&prior, &m), &var_v);

        let fused = fuse_with_prior(&prior, &m).unwrap();
        let got_mu = pose_deviation_ref(&prior, &fused.q, &fused.p);
        let err_mu = (got_mu - mu).amax();
        let err_cov = (Matrix6::from_diagonal(&var) - fused.cov).amax();
        stats.max_err = stats.max_err.max(err_mu).max(err_cov);
        let d = fused.cov.diagonal();
        if (0..6).any(|i| d[i] > var_c[i].min(var_v[i])) {
            stats.diag_violations += 1;
        }
    }
    stats
}

/// Worst difference between the process model's `v̇` evaluated on
/// noise-free IMU readings and a numeric derivative of the simulated
/// relative velocity, m/s².
pub fn gravity_cancellation(duration: f64, every: usize) -> f64 {
    let mut cfg = ExperimentConfig::default().sim_config(3);
    cfg.duration = duration;
    cfg.imu = ImuNoiseConfig::noise_free();
    cfg.visual = VisualNoiseConfig::noise_free();
    let stream = simulate(&cfg).unwrap();
    let mut worst: f64 = 0.0;
    for (s, imu) in stream.samples.iter().zip(&stream.imu).step_by(every) {
        let kin = sample_kinematics(&cfg, s);
        let x = FilterState {
            q: s.truth.rotation,
            w1: imu.w1,
            w2: imu.w2,
            p: s.truth.translation,
            v: kin.relative_velocity(),
            a1: imu.a1,
            a2: imu.a2,
        };
        let model = state_derivative(&x).v;
        let numeric = numeric_relative_accel(&cfg, s, 1e-5);
        worst = worst.max((model - numeric).amax());
    }
    worst
}

#[derive(Debug, Clone, Copy)]
pub struct GateStats {
    pub epochs: usize,
    pub rejected: usize,
}

impl GateStats {
    pub fn fraction(&self) -> f64 {
        self.rejected as f64 / self.epochs as f64
    }
}

/// Gate decisions on every vision epoch of a default flight with the given
/// outlier probability.
pub fn gate_rejections(outlier_prob: f64, seed: u64) -> GateStats {
    let mut cfg = ExperimentConfig::default();
    cfg.visual.outlier_prob = outlier_prob;
    cfg.visual.outlier_scale = 20.0;
    cfg.gate.k = 2.0;
    let prep = prepare_run(&cfg, seed).unwrap();
    let prior = prep.prior.inflated(cfg.prior.inflation);
    let mut stats = GateStats { epochs: 0, rejected: 0 };
    for v in prep.records.iter().filter_map(|r| r.vision) {
        let d = gate(&prior, &v, &cfg.gate);
        stats.epochs += 1;
        if d.rejected {
            assert_eq!(d.measurement, prior.as_measurement());
            stats.rejected += 1;
        }
    }
    stats
}

#[derive(Debug, Clone, Copy)]
pub struct MetricStats {
    pub pairs: usize,
    pub mismatches: usize,
    pub identity_exact: bool,
}

/// Library metrics against the double-loop references, compared with `==`.
pub fn metric_oracles(pairs: usize, seed: u64) -> MetricStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for _ in 0..pairs {
        let d = random_depth_map(&mut rng, 16, 0.2);
        let e = random_depth_map(&mut rng, 16, 0.4);
        let c = completeness_error(&d, &e).unwrap();
        let a = accuracy_error(&d, &e).unwrap();
        if c != naive_completeness(&d, &e) || a != naive_accuracy(&d, &e) {
            mismatches += 1;
        }
    }
    let gt = random_depth_map(&mut rng, 16, 0.2);
    let pose = RelativePose::new(random_quat(&mut rng), random_vec(&mut rng, 3.0));
    let est = synth_depth_map(&gt, &pose, &pose, &CameraIntrinsics::default(), 1.0).unwrap();
    let identity_exact = gt.width() == est.width()
        && gt.height() == est.height()
        && gt.depths().iter().zip(est.depths()).all(|(a, b)| a.to_bits() == b.to_bits());
    MetricStats { pairs, mismatches, identity_exact }
}

/// Every report file of `cfg`'s run, as bytes, in a fixed order.
pub fn report_bytes(cfg: &ExperimentConfig) -> Vec<(String, Vec<u8>)> {
    let report = run_experiment(cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&report, dir.path(), "run").unwrap();
    [files.series, files.summary, files.steps_plot, files.depth_plot]
        .iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(p).unwrap()))
        .collect()
}

/// Runs `cfg` twice on the default thread pool and once on a single thread;
/// true if all three produce identical report bytes.
pub fn deterministic(cfg: &ExperimentConfig) -> bool {
    let a = report_bytes(cfg);
    let b = report_bytes(cfg);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = pool.install(|| report_bytes(cfg));
    a == b && a == c
}
