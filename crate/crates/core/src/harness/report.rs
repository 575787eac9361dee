//! Report files for a run, all plain text:
//!
//! - `<stem>.series.jsonl`: one header record, then one record per step and
//!   per depth frame; enough to rebuild the summary exactly.
//! - `<stem>.summary.txt`: error table in the order roll, pitch, yaw, x, y, z.
//! - `<stem>.steps.dat`, `<stem>.depth.dat`: whitespace-separated columns.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::Mode;
use crate::harness::run::{median, normalized_error, DepthFrame, RunReport, StepRecord, SweepRow};
use crate::prior::WingPrior;

#[derive(Serialize, Deserialize)]
struct Header {
    mode: Mode,
    seed: u64,
    multiplier: f64,
    warmup: f64,
    prior: WingPrior,
    vision_epochs: usize,
    rejected: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Line {
    Header(Header),
    Step(StepRecord),
    Depth(DepthFrame),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportFiles {
    pub series: PathBuf,
    pub summary: PathBuf,
    pub steps_plot: PathBuf,
    pub depth_plot: PathBuf,
}

impl ReportFiles {
    pub fn new(dir: &Path, stem: &str) -> Self {
        Self {
            series: dir.join(format!("{stem}.series.jsonl")),
            summary: dir.join(format!("{stem}.summary.txt")),
            steps_plot: dir.join(format!("{stem}.steps.dat")),
            depth_plot: dir.join(format!("{stem}.depth.dat")),
        }
    }
}

fn num(v: f64, prec: usize) -> String {
    if v.is_finite() {
        format!("{v:.prec$}")
    } else {
        "-".into()
    }
}

pub fn format_summary(r: &RunReport) -> String {
    let s = r.summary();
    let sigma = r.prior.sigma();
    let mut o = String::new();
    let _ = writeln!(o, "# run summary");
    let _ = writeln!(o, "mode               {}", r.mode);
    let _ = writeln!(o, "seed               {}", r.seed);
    let _ = writeln!(o, "noise_multiplier   {}", r.multiplier);
    let _ = writeln!(o, "warmup_s           {}", r.warmup);
    let _ = writeln!(o, "steps              {}", s.counted_steps);
    let _ = writeln!(o, "vision_epochs      {}", r.vision_epochs);
    let _ = writeln!(o, "gate_rejections    {}", r.rejected);
    let _ = writeln!(o);
    let _ = writeln!(o, "{:<12}{:>12}{:>12}{:>12}{:>12}{:>12}{:>12}", "axis", "dtheta_x", "dtheta_y", "dtheta_z", "dp_x", "dp_y", "dp_z");
    let _ = writeln!(o, "{:<12}{:>12}{:>12}{:>12}{:>12}{:>12}{:>12}", "unit", "deg", "deg", "deg", "mm", "mm", "mm");
    let row = |name: &str, v: [f64; 6]| {
        let mut line = format!("{name:<12}");
        for x in v {
            let _ = write!(line, "{:>12}", num(x, 5));
        }
        line
    };
    let rmse = [s.rmse_theta[0], s.rmse_theta[1], s.rmse_theta[2], s.rmse_p[0], s.rmse_p[1], s.rmse_p[2]];
    let prior = [
        sigma[0].to_degrees(),
        sigma[1].to_degrees(),
        sigma[2].to_degrees(),
        sigma[3] * 1e3,
        sigma[4] * 1e3,
        sigma[5] * 1e3,
    ];
    let _ = writeln!(o, "{}", row("rmse", rmse));
    let _ = writeln!(o, "{}", row("prior_sigma", prior));
    let _ = writeln!(o);
    let _ = writeln!(o, "normalized_rmse    {}", num(s.normalized_rmse, 6));
    let _ = writeln!(o, "depth_frames       {}", s.depth_frames);
    let _ = writeln!(o, "mean_completeness  {}", num(s.mean_completeness, 6));
    let _ = writeln!(o, "mean_accuracy_m    {}", num(s.mean_accuracy, 6));
    o
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn write_series(path: &Path, r: &RunReport) -> Result<()> {
    let mut w = create(path)?;
    let header = Header {
        mode: r.mode,
        seed: r.seed,
        multiplier: r.multiplier,
        warmup: r.warmup,
        prior: r.prior,
        vision_epochs: r.vision_epochs,
        rejected: r.rejected,
    };
    let mut put = |line: &Line| -> Result<()> {
        serde_json::to_writer(&mut w, line).map_err(|e| Error::parse(path, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))
    };
    put(&Line::Header(header))?;
    for s in &r.steps {
        put(&Line::Step(*s))?;
    }
    for d in &r.depth {
        put(&Line::Depth(*d))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Rebuilds a report from its time series (wall time is not stored).
pub fn read_series(path: &Path) -> Result<RunReport> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header = None;
    let (mut steps, mut depth) = (Vec::new(), Vec::new());
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line).map_err(|e| Error::parse(path, format!("line {}: {e}", i + 1)))? {
            Line::Header(h) if header.is_none() => header = Some(h),
            Line::Header(_) => return Err(Error::parse(path, format!("line {}: second header", i + 1))),
            Line::Step(s) => steps.push(s),
            Line::Depth(d) => depth.push(d),
        }
    }
    let h = header.ok_or_else(|| Error::parse(path, "missing header record"))?;
    Ok(RunReport {
        mode: h.mode,
        seed: h.seed,
        multiplier: h.multiplier,
        warmup: h.warmup,
        prior: h.prior,
        steps,
        depth,
        vision_epochs: h.vision_epochs,
        rejected: h.rejected,
        elapsed: Duration::ZERO,
    })
}

fn steps_plot(r: &RunReport) -> String {
    let sigma = r.prior.sigma();
    let mut o = String::from(
        "# t_s err_dtheta_x_deg err_dtheta_y_deg err_dtheta_z_deg err_dp_x_mm err_dp_y_mm err_dp_z_mm normalized counted\n",
    );
    for s in &r.steps {
        let e = s.error();
        let _ = writeln!(
            o,
            "{} {:e} {:e} {:e} {:e} {:e} {:e} {:e} {}",
            s.t,
            e[0].to_degrees(),
            e[1].to_degrees(),
            e[2].to_degrees(),
            e[3] * 1e3,
            e[4] * 1e3,
            e[5] * 1e3,
            normalized_error(s, &sigma),
            (s.t >= r.warmup) as u8
        );
    }
    o
}

fn depth_plot(r: &RunReport) -> String {
    let mut o = String::from("# t_s completeness accuracy_m gt_valid overlap\n");
    for d in &r.depth {
        let acc = d.estimated.accuracy.map_or("nan".to_string(), |a| format!("{a:e}"));
        let _ = writeln!(o, "{} {:e} {} {} {}", d.t, d.estimated.completeness, acc, d.estimated.gt_valid, d.estimated.overlap);
    }
    o
}

/// Writes all report files for `r` into `dir` with the given file stem.
pub fn emit_report(r: &RunReport, dir: &Path, stem: &str) -> Result<ReportFiles> {
    let files = ReportFiles::new(dir, stem);
    write_series(&files.series, r)?;
    write_text(&files.summary, &format_summary(r))?;
    write_text(&files.steps_plot, &steps_plot(r))?;
    write_text(&files.depth_plot, &depth_plot(r))?;
    Ok(files)
}

/// Mode comparison over seeds: `reports[seed][mode]`.
pub fn format_mode_table(reports: &[Vec<RunReport>]) -> String {
    let mut o = String::from("# normalized RMSE per mode over seeds\n");
    let _ = writeln!(
        o,
        "{:<14}{:>14}{:>12}{:>12}{:>12}{:>14}{:>12}",
        "mode", "median_nrmse", "min", "max", "roll_deg", "completeness", "accuracy_m"
    );
    let Some(first) = reports.first() else { return o };
    for (k, mode) in first.iter().map(|r| r.mode).enumerate() {
        let runs: Vec<&RunReport> = reports.iter().filter_map(|row| row.get(k)).collect();
        let nr: Vec<f64> = runs.iter().map(|r| r.normalized_rmse()).collect();
        let sums: Vec<_> = runs.iter().map(|r| r.summary()).collect();
        let roll = median(&sums.iter().map(|s| s.rmse_theta[0]).collect::<Vec<_>>());
        let comp = median(&sums.iter().map(|s| s.mean_completeness).collect::<Vec<_>>());
        let acc = median(&sums.iter().map(|s| s.mean_accuracy).collect::<Vec<_>>());
        let min = nr.iter().copied().fold(f64::INFINITY, f64::min);
        let max = nr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(
            o,
            "{:<14}{:>14}{:>12}{:>12}{:>12}{:>14}{:>12}",
            mode.as_str(),
            num(median(&nr), 5),
            num(min, 5),
            num(max, 5),
            num(roll, 5),
            num(comp, 5),
            num(acc, 4)
        );
    }
    o
}

pub fn format_sweep(rows: &[SweepRow]) -> String {
    let mut o = String::from("# normalized RMSE vs IMU noise multiplier\n# multiplier median runs...\n");
    for r in rows {
        let _ = write!(o, "{} {}", r.multiplier, num(r.median, 6));
        for v in &r.normalized {
            let _ = write!(o, " {}", num(*v, 6));
        }
        o.push('\n');
    }
    o
}
