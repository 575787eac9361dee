//! Runs all four estimator modes on the same flights and prints the
//! per-axis RMSE of the first seed plus normalized RMSE over all seeds.
//!
//! cargo run --release --example compare_modes -- [runs]

use flexstereo::harness::{compare_modes, format_mode_table, ExperimentConfig, Mode};

fn main() -> flexstereo::Result<()> {
    let mut cfg = ExperimentConfig::default();
    if let Some(n) = std::env::args().nth(1).and_then(|s| s.parse().ok()) {
        cfg.runs = n;
    }
    let reports = compare_modes(&cfg, &Mode::ALL)?;

    println!("seed {}: RMSE (deg, deg, deg, mm, mm, mm)", cfg.seed);
    for r in &reports[0] {
        let s = r.summary();
        println!(
            "{:<14}{:>9.4}{:>9.4}{:>9.4}{:>9.3}{:>9.3}{:>9.2}   rejected {}/{}",
            r.mode.as_str(),
            s.rmse_theta[0],
            s.rmse_theta[1],
            s.rmse_theta[2],
            s.rmse_p[0],
            s.rmse_p[1],
            s.rmse_p[2],
            r.rejected,
            r.vision_epochs
        );
    }
    println!();
    print!("{}", format_mode_table(&reports));
    Ok(())
}
