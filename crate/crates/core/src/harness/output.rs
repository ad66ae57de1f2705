use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::sweep::ExperimentResult;
use crate::channel::linear_to_db;
use crate::{Error, Result};

pub const CSV_COLUMNS: &str =
    "estimator,sweep_axis,sweep_value,metric,value_db,trials,degenerate_count,seed,config_hash";

const HEADER_PREFIX: &str = "# ris-mle";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    JsonLines,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" | "json-lines" => Ok(OutputFormat::JsonLines),
            other => Err(Error::Config(format!("unknown output format '{other}' (csv or jsonl)"))),
        }
    }
}

/// NMSE rows are written in dB; dimensionless diagnostics (ratios, counts) as-is.
fn formatted_value(metric: &str, value: f64) -> String {
    if metric.starts_with("nmse") {
        format!("{:.4}", linear_to_db(value))
    } else {
        format!("{value:.4}")
    }
}

/// CSV text: a `#` metadata line with seed and config hash, the column
/// header, then one row per (estimator, sweep value, metric).
pub fn render_csv(result: &ExperimentResult) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{HEADER_PREFIX} seed={} config_hash={} sweep_axis={}",
        result.seed, result.config_hash, result.axis
    )
    .unwrap();
    out.push_str(CSV_COLUMNS);
    out.push('\n');
    for point in &result.points {
        for row in &point.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                row.estimator,
                result.axis,
                point.value,
                row.metric,
                formatted_value(&row.metric, row.value),
                row.trials,
                row.degenerate_count,
                result.seed,
                point.config_hash
            )
            .unwrap();
        }
    }
    out
}

#[derive(Serialize)]
struct JsonHeader<'a> {
    seed: u64,
    config_hash: &'a str,
    sweep_axis: &'a str,
    config: &'a super::config::ScenarioConfig,
}

#[derive(Serialize)]
struct JsonRow<'a> {
    estimator: &'a str,
    sweep_axis: &'a str,
    sweep_value: f64,
    metric: &'a str,
    value_db: String,
    trials: usize,
    degenerate_count: usize,
    seed: u64,
    config_hash: &'a str,
}

/// JSON-lines text: a header object echoing the config, then one object per row.
pub fn render_jsonl(result: &ExperimentResult) -> String {
    let mut out = serde_json::to_string(&JsonHeader {
        seed: result.seed,
        config_hash: &result.config_hash,
        sweep_axis: &result.axis,
        config: &result.config,
    })
    .expect("header serializes");
    out.push('\n');
    for point in &result.points {
        for row in &point.rows {
            let line = serde_json::to_string(&JsonRow {
                estimator: &row.estimator,
                sweep_axis: &result.axis,
                sweep_value: point.value,
                metric: &row.metric,
                value_db: formatted_value(&row.metric, row.value),
                trials: row.trials,
                degenerate_count: row.degenerate_count,
                seed: result.seed,
                config_hash: &point.config_hash,
            })
            .expect("row serializes");
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}

pub fn render(result: &ExperimentResult, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => render_csv(result),
        OutputFormat::JsonLines => render_jsonl(result),
    }
}

pub fn emit_results(result: &ExperimentResult, path: &Path, format: OutputFormat) -> Result<()> {
    std::fs::write(path, render(result, format)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `(seed, config_hash)` from the metadata line of emitted CSV or JSON-lines text.
pub fn parse_header(text: &str) -> Result<(u64, String)> {
    let first = text.lines().next().ok_or_else(|| Error::Config("empty results file".into()))?;
    if let Some(rest) = first.strip_prefix(HEADER_PREFIX) {
        let mut seed = None;
        let mut hash = None;
        for field in rest.split_whitespace() {
            match field.split_once('=') {
                Some(("seed", v)) => seed = v.parse().ok(),
                Some(("config_hash", v)) => hash = Some(v.to_string()),
                _ => {}
            }
        }
        return seed
            .zip(hash)
            .ok_or_else(|| Error::Config("results header lacks seed or config_hash".into()));
    }
    let v: serde_json::Value =
        serde_json::from_str(first).map_err(|e| Error::Config(format!("unrecognized results header: {e}")))?;
    let seed = v["seed"].as_u64();
    let hash = v["config_hash"].as_str().map(str::to_string);
    seed.zip(hash)
        .ok_or_else(|| Error::Config("results header lacks seed or config_hash".into()))
}
