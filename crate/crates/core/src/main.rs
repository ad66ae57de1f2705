use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use ris_mle::harness::{
    emit_results, render, run_fig2_diagnostics, run_sweep, with_workers, OutputFormat, ScenarioConfig, SweepAxis,
    FULL_TRIALS,
};
use ris_mle::{Error, Result};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Fig2,
    Fig3,
    Fig4a,
    Fig4b,
}

/// Monte-Carlo NMSE experiments for RIS-assisted wideband channel estimation.
#[derive(Debug, Parser)]
#[command(name = "ris-mle", version)]
struct Cli {
    /// Flat TOML scenario file; omitted keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sweep axis: p, kappa-ris-ue, kappa-both or dimension.
    #[arg(long)]
    sweep: Option<String>,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or jsonl.
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Use the full trial count instead of the desk-scale default.
    #[arg(long)]
    full: bool,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
}

const POWER_VALUES: [f64; 5] = [0.0, 5.0, 10.0, 15.0, 20.0];
const KAPPA_VALUES: [f64; 4] = [0.0, 8.0, 16.0, 24.0];

fn run(cli: Cli) -> Result<()> {
    let format = OutputFormat::parse(&cli.format)?;
    let mut config = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if cli.full {
        config.trials = FULL_TRIALS;
    }
    if let Some(t) = cli.trials {
        config.trials = t;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }

    let mut axis = None;
    let mut values = None;
    let mut fig2 = false;
    match cli.preset {
        Some(Preset::Fig2) => fig2 = true,
        Some(Preset::Fig3) => {
            axis = Some(SweepAxis::PilotPower);
            values = Some(POWER_VALUES.to_vec());
        }
        Some(Preset::Fig4a) => {
            axis = Some(SweepAxis::KappaBoth);
            values = Some(KAPPA_VALUES.to_vec());
        }
        Some(Preset::Fig4b) => {
            config.kappa_bs_ris_db = 0.0;
            axis = Some(SweepAxis::KappaRisUe);
            values = Some(KAPPA_VALUES.to_vec());
        }
        None => {}
    }
    if let Some(s) = &cli.sweep {
        axis = Some(SweepAxis::parse(s)?);
    }
    if let Some(v) = cli.values {
        values = Some(v);
    }
    config.validate()?;

    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(Error::Config("--workers must be >= 1".into()));
    }

    let result = with_workers(workers, || {
        if fig2 {
            run_fig2_diagnostics(&config)
        } else {
            let axis = axis.ok_or_else(|| Error::Config("choose --sweep or --preset".into()))?;
            let values = values.ok_or_else(|| Error::Config("--values is required with --sweep".into()))?;
            run_sweep(&config, axis, &values)
        }
    })?;

    match &cli.out {
        Some(path) => emit_results(&result, path, format)?,
        None => print!("{}", render(&result, format)),
    }
    eprintln!(
        "ris-mle: {} sweep points in {:.1} s (seed {}, config {})",
        result.points.len(),
        result.elapsed_secs,
        result.seed,
        result.config_hash
    );
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ris-mle: error: {e}");
            ExitCode::FAILURE
        }
    }
}
