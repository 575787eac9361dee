//! Sweeps the roll-joint stiffness and prints the resulting standard
//! deviation of relative roll, for matching a target deflection level.
//!
//! cargo run --release --example tune_wing_stiffness -- [target_deg]

use flexstereo::prior::calibrate_prior;
use flexstereo::sim::{simulate, SimConfig};
use rayon::prelude::*;

fn main() -> flexstereo::Result<()> {
    let target: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.9);
    let stiffness: Vec<f64> = (0..12).map(|i| 30.0 + 5.0 * i as f64).collect();
    let rows: Vec<(f64, f64, f64)> = stiffness
        .par_iter()
        .map(|&k| {
            let sigmas: Vec<(f64, f64)> = (1..=3)
                .map(|seed| {
                    let mut cfg = SimConfig::default().with_seed(seed);
                    cfg.wing.roll.stiffness = k;
                    let s = simulate(&cfg).expect("simulation");
                    let truth: Vec<_> = s.samples.iter().map(|x| x.truth).collect();
                    let p = calibrate_prior(&truth).expect("calibration");
                    (p.sigma_theta.x.to_degrees(), p.sigma_p.z * 1e3)
                })
                .collect();
            let n = sigmas.len() as f64;
            (k, sigmas.iter().map(|s| s.0).sum::<f64>() / n, sigmas.iter().map(|s| s.1).sum::<f64>() / n)
        })
        .collect();

    println!("{:>10} {:>14} {:>12}", "k [Nm/rad]", "roll std [deg]", "z std [mm]");
    for (k, roll, z) in &rows {
        let mark = if (roll - target).abs() < 0.1 * target { " <" } else { "" };
        println!("{k:>10.1} {roll:>14.3} {z:>12.2}{mark}");
    }
    Ok(())
}
