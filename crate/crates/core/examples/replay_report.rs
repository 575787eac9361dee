//! Writes the report files of one run, reads the series back and checks
//! that the summary is rebuilt exactly.
//!
//! cargo run --release --example replay_report -- [out dir]

use std::path::PathBuf;

use flexstereo::harness::{emit_report, format_summary, read_series, run_experiment, ExperimentConfig};

fn main() -> flexstereo::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "report-out".into()));
    std::fs::create_dir_all(&out).map_err(|e| flexstereo::Error::io(&out, e))?;

    let report = run_experiment(&ExperimentConfig::default())?;
    let files = emit_report(&report, &out, "full-1")?;
    let back = read_series(&files.series)?;
    print!("{}", format_summary(&back));
    println!("replayed summary identical: {}", back.summary() == report.summary());
    for p in [&files.series, &files.summary, &files.steps_plot, &files.depth_plot] {
        println!("  {}", p.display());
    }
    Ok(())
}
