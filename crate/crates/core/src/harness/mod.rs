//! Experiment orchestration: configuration, simulate → estimate → evaluate
//! pipelines for each estimator mode, noise sweeps and report files.

pub mod config;
pub mod report;
pub mod run;

pub use config::{DepthSettings, ExperimentConfig, FilterSettings, Mode, PriorSettings};
pub use report::{emit_report, format_mode_table, format_summary, format_sweep, read_series, ReportFiles};
pub use run::{
    compare_modes, depth_frames, estimate_stream, median, noise_sweep, normalized_error, normalized_rmse, prepare_run,
    run_experiment, run_modes, run_prepared, DepthFrame, EstimateSeries, PreparedRun, RunReport, StepRecord, Summary,
    SweepRow,
};
