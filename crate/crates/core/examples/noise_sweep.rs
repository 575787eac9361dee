//! Full-mode error against IMU noise level. Flights and noise draws are
//! shared across multipliers, so rows differ only in noise amplitude.
//!
//! cargo run --release --example noise_sweep -- [runs]

use flexstereo::harness::{format_sweep, noise_sweep, ExperimentConfig};

fn main() -> flexstereo::Result<()> {
    let mut cfg = ExperimentConfig::default();
    if let Some(n) = std::env::args().nth(1).and_then(|s| s.parse().ok()) {
        cfg.runs = n;
    }
    let rows = noise_sweep(&cfg, &cfg.multipliers.clone())?;
    print!("{}", format_sweep(&rows));
    let base = rows[0].median;
    for r in &rows {
        println!("{:>5}x  {:.3} of the 1x value", r.multiplier, r.median / base);
    }
    Ok(())
}
