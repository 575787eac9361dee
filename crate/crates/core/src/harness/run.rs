use std::time::{Duration, Instant};

use nalgebra::Vector6;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depth::{camera_pose_from_rig, evaluate_depth, render_scene, synth_depth_map, DepthErrorReport};
use crate::ekf::{ImuPair, RelativeEkf};
use crate::error::{Error, Result};
use crate::geometry::RelativePose;
use crate::harness::config::{ExperimentConfig, Mode};
use crate::prior::{calibrate_prior, deviation, gate, WingPrior};
use crate::sim::{simulate, StreamRecord};

/// Truth and estimate at one IMU epoch, as deviations `[δθ; Δp]` (rad, m)
/// from the calibrated prior mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub truth: [f64; 6],
    pub estimate: [f64; 6],
}

impl StepRecord {
    pub fn error(&self) -> Vector6<f64> {
        Vector6::from_fn(|i, _| self.estimate[i] - self.truth[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthFrame {
    pub t: f64,
    /// Estimate used for the stereo calibration.
    pub estimated: DepthErrorReport,
}

/// One estimator run on one flight.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub mode: Mode,
    pub seed: u64,
    pub multiplier: f64,
    pub warmup: f64,
    /// Calibrated prior; its mean is the deviation origin and its std-devs
    /// normalize errors.
    pub prior: WingPrior,
    pub steps: Vec<StepRecord>,
    pub depth: Vec<DepthFrame>,
    pub vision_epochs: usize,
    pub rejected: usize,
    /// Wall time; not part of any written report.
    pub elapsed: Duration,
}

/// Aggregate numbers of a [`RunReport`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    /// deg
    pub rmse_theta: [f64; 3],
    /// mm
    pub rmse_p: [f64; 3],
    pub normalized_rmse: f64,
    pub counted_steps: usize,
    pub mean_completeness: f64,
    pub mean_accuracy: f64,
    pub depth_frames: usize,
}

impl RunReport {
    /// Per-axis RMSE of the deviation estimate over `t >= warmup`, rad and m.
    pub fn rmse(&self) -> Vector6<f64> {
        let mut sum = Vector6::zeros();
        let mut n = 0usize;
        for s in self.steps.iter().filter(|s| s.t >= self.warmup) {
            let e = s.error();
            sum += e.component_mul(&e);
            n += 1;
        }
        (sum / n as f64).map(f64::sqrt)
    }

    pub fn normalized_rmse(&self) -> f64 {
        normalized_rmse(&self.rmse(), &self.prior.sigma())
    }

    pub fn summary(&self) -> Summary {
        let r = self.rmse();
        let counted_steps = self.steps.iter().filter(|s| s.t >= self.warmup).count();
        let completeness: Vec<f64> = self.depth.iter().map(|d| d.estimated.completeness).collect();
        let accuracy: Vec<f64> = self.depth.iter().filter_map(|d| d.estimated.accuracy).collect();
        Summary {
            rmse_theta: [r[0].to_degrees(), r[1].to_degrees(), r[2].to_degrees()],
            rmse_p: [r[3] * 1e3, r[4] * 1e3, r[5] * 1e3],
            normalized_rmse: self.normalized_rmse(),
            counted_steps,
            mean_completeness: mean(&completeness),
            mean_accuracy: mean(&accuracy),
            depth_frames: self.depth.len(),
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Per-axis RMSE divided by the prior std-dev, reduced to one RMS value.
pub fn normalized_rmse(rmse: &Vector6<f64>, sigma: &Vector6<f64>) -> f64 {
    let z = rmse.component_div(sigma);
    (z.norm_squared() / 6.0).sqrt()
}

/// Per-timestep normalized error, `sqrt(mean_i (e_i / σ_i)²)`.
pub fn normalized_error(step: &StepRecord, sigma: &Vector6<f64>) -> f64 {
    (step.error().component_div(sigma).norm_squared() / 6.0).sqrt()
}

/// Median; NaN for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// A simulated flight together with the prior calibrated for it.
#[derive(Clone, Debug)]
pub struct PreparedRun {
    pub seed: u64,
    pub records: Vec<StreamRecord>,
    /// Calibrated prior, before inflation.
    pub prior: WingPrior,
}

/// Calibrates the prior on a separate flight and simulates the main one.
pub fn prepare_run(cfg: &ExperimentConfig, seed: u64) -> Result<PreparedRun> {
    cfg.validate()?;
    let calibration = simulate(&cfg.calibration_config(seed))?;
    let truth: Vec<RelativePose> = calibration.samples.iter().map(|s| s.truth).collect();
    let prior = calibrate_prior(&truth)?;
    let records = simulate(&cfg.sim_config(seed))?.records();
    Ok(PreparedRun { seed, records, prior })
}

/// Estimated relative pose at every record plus gate statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateSeries {
    pub poses: Vec<RelativePose>,
    pub vision_epochs: usize,
    pub rejected: usize,
}

fn floored(m: &ImuPair, floor: f64) -> ImuPair {
    ImuPair { variance: m.variance.map(|v| v.max(floor)), ..*m }
}

/// Runs one estimator over a stream. `prior` is the prior as handed to the
/// estimator (inflation already applied).
pub fn estimate_stream(
    records: &[StreamRecord],
    prior: &WingPrior,
    mode: Mode,
    cfg: &ExperimentConfig,
) -> Result<EstimateSeries> {
    let mut out = EstimateSeries { poses: Vec::with_capacity(records.len()), vision_epochs: 0, rejected: 0 };
    let mut filter = if mode.uses_filter() {
        Some(RelativeEkf::from_prior(prior, &cfg.filter.initial, cfg.filter.process_noise())?)
    } else {
        None
    };
    let mut held = prior.mean();
    let mut last_t = None;
    let mut prev_imu: Option<ImuPair> = None;
    for r in records {
        let decision = r.vision.map(|v| gate(prior, &v, &cfg.gate));
        if let Some(d) = &decision {
            out.vision_epochs += 1;
            out.rejected += d.rejected as usize;
        }
        match mode {
            Mode::Fixed => {}
            Mode::VisualPrior => {
                if let Some(d) = decision {
                    held = d.measurement.pose();
                }
            }
            Mode::ImuPrior | Mode::Full => {
                let f = filter.as_mut().expect("filter modes carry a filter");
                if let Some(t0) = last_t {
                    f.predict(r.t - t0)?;
                }
                let m = match (cfg.filter.average_imu, prev_imu) {
                    (true, Some(p)) => r.imu.averaged_with(&p),
                    _ => r.imu,
                };
                prev_imu = Some(r.imu);
                f.update_imu(&floored(&m, cfg.filter.variance_floor))?;
                if decision.is_some() {
                    let m = match (mode, decision) {
                        (Mode::Full, Some(d)) => d.measurement,
                        _ => prior.as_measurement(),
                    };
                    f.update_pose(&m)?;
                }
                if !f.state.is_finite() {
                    return Err(Error::Singular("filter state diverged"));
                }
                held = f.state.pose();
            }
        }
        last_t = Some(r.t);
        out.poses.push(held);
    }
    Ok(out)
}

fn deviation_array(prior: &WingPrior, pose: &RelativePose) -> Result<[f64; 6]> {
    let d = deviation(prior, pose)?.to_vector();
    Ok([d[0], d[1], d[2], d[3], d[4], d[5]])
}

/// Depth metrics on every `frame_stride`-th vision epoch after the warm-up.
pub fn depth_frames(records: &[StreamRecord], poses: &[RelativePose], cfg: &ExperimentConfig) -> Result<Vec<DepthFrame>> {
    let picks: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.vision.is_some())
        .map(|(i, _)| i)
        .step_by(cfg.depth.frame_stride)
        .filter(|&i| records[i].t >= cfg.warmup)
        .collect();
    let d = &cfg.depth;
    picks
        .par_iter()
        .map(|&i| {
            let truth = camera_pose_from_rig(&records[i].truth);
            let estimate = camera_pose_from_rig(&poses[i]);
            let gt = render_scene(&d.scene, &d.camera, d.pixel_stride, &truth)?;
            let est = synth_depth_map(&gt, &truth, &estimate, &d.camera, d.v_thresh)?;
            Ok(DepthFrame { t: records[i].t, estimated: evaluate_depth(&gt, &est)? })
        })
        .collect()
}

/// Runs one mode on a prepared flight.
pub fn run_prepared(prep: &PreparedRun, mode: Mode, cfg: &ExperimentConfig) -> Result<RunReport> {
    let start = Instant::now();
    let used = prep.prior.inflated(cfg.prior.inflation);
    let est = estimate_stream(&prep.records, &used, mode, cfg)?;
    let steps = prep
        .records
        .iter()
        .zip(&est.poses)
        .map(|(r, p)| {
            Ok(StepRecord { t: r.t, truth: deviation_array(&prep.prior, &r.truth)?, estimate: deviation_array(&prep.prior, p)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let depth = depth_frames(&prep.records, &est.poses, cfg)?;
    Ok(RunReport {
        mode,
        seed: prep.seed,
        multiplier: cfg.imu.multiplier,
        warmup: cfg.warmup,
        prior: prep.prior,
        steps,
        depth,
        vision_epochs: est.vision_epochs,
        rejected: est.rejected,
        elapsed: start.elapsed(),
    })
}

/// Simulate, calibrate, estimate with `cfg.mode`, evaluate.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let start = Instant::now();
    let prep = prepare_run(cfg, cfg.seed)?;
    let mut report = run_prepared(&prep, cfg.mode, cfg)?;
    report.elapsed = start.elapsed();
    Ok(report)
}

/// All `modes` on the same flight and prior.
pub fn run_modes(cfg: &ExperimentConfig, seed: u64, modes: &[Mode]) -> Result<Vec<RunReport>> {
    let prep = prepare_run(cfg, seed)?;
    modes.par_iter().map(|m| run_prepared(&prep, *m, cfg)).collect()
}

/// `cfg.runs` seeds starting at `cfg.seed`, each with every mode; indexed
/// `[seed][mode]`.
pub fn compare_modes(cfg: &ExperimentConfig, modes: &[Mode]) -> Result<Vec<Vec<RunReport>>> {
    cfg.validate()?;
    (0..cfg.runs as u64).into_par_iter().map(|i| run_modes(cfg, cfg.seed + i, modes)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub multiplier: f64,
    /// One normalized RMSE per seed.
    pub normalized: Vec<f64>,
    pub median: f64,
}

/// Runs `cfg.mode` at every IMU noise multiplier over `cfg.runs` seeds.
/// Flights, priors and noise draws are shared across multipliers; only the
/// noise amplitude changes.
pub fn noise_sweep(cfg: &ExperimentConfig, multipliers: &[f64]) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if multipliers.iter().any(|m| !(*m >= 1.0)) {
        return Err(Error::Config("noise multipliers must be >= 1".into()));
    }
    let jobs: Vec<(usize, u64)> =
        (0..multipliers.len()).flat_map(|m| (0..cfg.runs as u64).map(move |s| (m, cfg.seed + s))).collect();
    let values = jobs
        .par_iter()
        .map(|&(m, seed)| {
            let mut c = cfg.clone();
            c.imu.multiplier = multipliers[m];
            c.seed = seed;
            run_experiment(&c).map(|r| r.normalized_rmse())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(multipliers
        .iter()
        .enumerate()
        .map(|(m, &multiplier)| {
            let normalized = values[m * cfg.runs..(m + 1) * cfg.runs].to_vec();
            SweepRow { multiplier, median: median(&normalized), normalized }
        })
        .collect())
}
