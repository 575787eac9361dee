//! Command-line front end over the `flexstereo` library.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use flexstereo::harness::{
    compare_modes, emit_report, format_mode_table, format_summary, format_sweep, noise_sweep, prepare_run,
    read_series, run_prepared, ExperimentConfig, Mode, PreparedRun,
};
use flexstereo::prior::{calibrate_prior, WingPrior};
use flexstereo::sim::{read_stream, simulate, write_stream};
use flexstereo::{Error, Result};

#[derive(Parser)]
#[command(name = "flexstereo", version, about = "Flexible-wing stereo baseline estimation experiments")]
struct Cli {
    /// TOML experiment config; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "FLEXSTEREO_OUT", default_value = "flexstereo-out")]
    out: PathBuf,
    /// fixed, visual+prior, imu+prior or full.
    #[arg(long, global = true)]
    mode: Option<Mode>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a flight and write its sensor stream.
    Simulate,
    /// Calibrate a wing prior on a dedicated flight.
    CalibratePrior,
    /// Run one estimator and write its report files.
    Estimate {
        /// Stream from `simulate`; simulated from the config when absent.
        #[arg(long)]
        stream: Option<PathBuf>,
        /// Prior from `calibrate-prior`; calibrated when absent.
        #[arg(long)]
        prior: Option<PathBuf>,
    },
    /// Summarize a written series, or compare all modes over `runs` seeds.
    Evaluate {
        #[arg(long)]
        series: Option<PathBuf>,
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Normalized RMSE against IMU noise multiplier.
    SweepNoise {
        #[arg(long)]
        runs: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("flexstereo: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(mode) = cli.mode {
        cfg.mode = mode;
    }
    cfg.validate()?;
    std::fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    let out = cli.out.as_path();

    match cli.command {
        Command::Simulate => {
            let stream = simulate(&cfg.sim_config(cfg.seed))?;
            let path = out.join(format!("stream-{}.jsonl", cfg.seed));
            write_stream(&path, &stream.records())?;
            let epochs = stream.vision.iter().flatten().count();
            println!("{} samples, {} vision epochs -> {}", stream.samples.len(), epochs, path.display());
        }
        Command::CalibratePrior => {
            let flight = simulate(&cfg.calibration_config(cfg.seed))?;
            let truth: Vec<_> = flight.samples.iter().map(|s| s.truth).collect();
            let prior = calibrate_prior(&truth)?;
            let path = out.join(format!("prior-{}.toml", cfg.seed));
            prior.save(&path)?;
            println!("{}", describe_prior(&prior));
            println!("-> {}", path.display());
        }
        Command::Estimate { stream, prior } => {
            let (records, prior) = match (stream, prior) {
                (Some(s), Some(p)) => (read_stream(&s)?, WingPrior::load(&p)?),
                (s, p) => {
                    let sim = prepare_run(&cfg, cfg.seed)?;
                    let records = match s {
                        Some(s) => read_stream(&s)?,
                        None => sim.records,
                    };
                    let prior = match p {
                        Some(p) => WingPrior::load(&p)?,
                        None => sim.prior,
                    };
                    (records, prior)
                }
            };
            let prep = PreparedRun { seed: cfg.seed, records, prior };
            let report = run_prepared(&prep, cfg.mode, &cfg)?;
            let stem = format!("{}-{}", file_stem(cfg.mode), cfg.seed);
            let files = emit_report(&report, out, &stem)?;
            print!("{}", format_summary(&report));
            println!("-> {}", files.series.display());
        }
        Command::Evaluate { series: Some(path), .. } => {
            let report = read_series(&path)?;
            print!("{}", format_summary(&report));
        }
        Command::Evaluate { series: None, runs } => {
            if let Some(n) = runs {
                cfg.runs = n;
            }
            let reports = compare_modes(&cfg, &Mode::ALL)?;
            for r in &reports[0] {
                emit_report(r, out, &format!("{}-{}", file_stem(r.mode), r.seed))?;
            }
            let table = format_mode_table(&reports);
            write(&out.join("modes.txt"), &table)?;
            print!("{table}");
        }
        Command::SweepNoise { runs } => {
            if let Some(n) = runs {
                cfg.runs = n;
            }
            let rows = noise_sweep(&cfg, &cfg.multipliers)?;
            let table = format_sweep(&rows);
            write(&out.join(format!("sweep-{}.txt", file_stem(cfg.mode))), &table)?;
            print!("{table}");
        }
    }
    Ok(())
}

fn file_stem(mode: Mode) -> String {
    mode.as_str().replace('+', "-")
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn describe_prior(p: &WingPrior) -> String {
    let s = p.sigma();
    format!(
        "sigma dtheta {:.4} {:.4} {:.4} deg\nsigma dp     {:.3} {:.3} {:.3} mm",
        s[0].to_degrees(),
        s[1].to_degrees(),
        s[2].to_degrees(),
        s[3] * 1e3,
        s[4] * 1e3,
        s[5] * 1e3
    )
}
