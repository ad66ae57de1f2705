//! Monte-Carlo experiment harness: configuration, sweeps and result files.

pub mod config;
pub mod output;
pub mod sweep;

pub use config::{Metric, ScenarioConfig, FULL_TRIALS};
pub use output::{emit_results, parse_header, render, render_csv, render_jsonl, OutputFormat, CSV_COLUMNS};
pub use sweep::{
    run_fig2_diagnostics, run_sweep, run_sweep_with_workers, trial_rng, with_workers, ExperimentResult,
    MetricRow, SweepAxis, SweepPoint,
};
