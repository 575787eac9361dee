//! Runs the filter by hand over a simulated flight and prints the roll
//! estimate next to the truth once a second. Each IMU reading is averaged
//! with its predecessor before the update, as the harness does.
//!
//! cargo run --release --example track_relative_pose

use flexstereo::ekf::{ImuPair, RelativeEkf};
use flexstereo::harness::{prepare_run, ExperimentConfig};
use flexstereo::prior::{deviation, gate};

fn main() -> flexstereo::Result<()> {
    let cfg = ExperimentConfig { duration: 20.0, ..ExperimentConfig::default() };
    let prep = prepare_run(&cfg, 2)?;
    let prior = prep.prior.inflated(cfg.prior.inflation);
    let mut f = RelativeEkf::from_prior(&prior, &cfg.filter.initial, cfg.filter.process_noise())?;

    println!("{:>6} {:>10} {:>10} {:>10}", "t", "roll", "estimate", "sigma");
    let mut prev: Option<ImuPair> = None;
    for (k, r) in prep.records.iter().enumerate() {
        if let Some(p) = prev {
            f.predict(r.t - p.t)?;
        }
        // trapezoid rule for the zeroth-order prediction
        f.update_imu(&prev.map_or(r.imu, |p| r.imu.averaged_with(&p)))?;
        prev = Some(r.imu);
        if let Some(v) = &r.vision {
            f.update_pose(&gate(&prior, v, &cfg.gate).measurement)?;
        }
        if k % 100 == 0 {
            let truth = deviation(&prior, &r.truth)?.theta.x.to_degrees();
            let est = deviation(&prior, &f.state.pose())?.theta.x.to_degrees();
            let sigma = f.cov.matrix()[(0, 0)].sqrt().to_degrees();
            println!("{:>6.1} {truth:>10.4} {est:>10.4} {sigma:>10.4}", r.t);
        }
    }
    Ok(())
}
