use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::runner::xhat_scalar;
use super::{BenchConfig, BenchError, BenchOutcome, CriterionNoiseReport};
use crate::gp::CandidateGrid;
use crate::optimizer::{RunTrace, Snapshot};

pub const TRACES_FILE: &str = "traces.jsonl";
pub const RUNS_FILE: &str = "runs.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const PROFILES_FILE: &str = "profiles.jsonl";
pub const RHO_FILE: &str = "rho.csv";
pub const CONFIG_FILE: &str = "config.toml";
pub const REPORT_FILE: &str = "report.json";

/// One line of `traces.jsonl`. Iteration 0 is the state after the initial
/// design and has no chosen point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceLine {
    pub run: usize,
    pub iter: usize,
    pub policy: String,
    /// Evaluations spent by the loop so far, initial design excluded.
    pub n: usize,
    pub chosen_index: Option<usize>,
    pub values: Vec<f64>,
    /// Grid coordinate of x̂ on 1-D grids, its index otherwise.
    pub xhat: f64,
    #[serde(rename = "Mhat")]
    pub mhat: f64,
    #[serde(rename = "H")]
    pub entropy: f64,
}

impl TraceLine {
    fn new(run: usize, policy: &str, grid: &CandidateGrid, iter: usize, n: usize, snap: &Snapshot) -> Self {
        TraceLine {
            run,
            iter,
            policy: policy.to_string(),
            n,
            chosen_index: None,
            values: Vec::new(),
            xhat: xhat_scalar(grid, snap),
            mhat: snap.mhat,
            entropy: snap.entropy,
        }
    }
}

pub fn parse_trace_line(line: &str) -> Result<TraceLine, BenchError> {
    serde_json::from_str(line).map_err(|e| BenchError::Config(format!("bad trace line: {e}")))
}

/// Reads every non-blank line of a traces file.
pub fn read_traces(path: &Path) -> Result<Vec<TraceLine>, BenchError> {
    let text = fs::read_to_string(path).map_err(|source| io_error(path, source))?;
    text.lines().filter(|l| !l.trim().is_empty()).map(parse_trace_line).collect()
}

fn trace_lines(run: usize, grid: &CandidateGrid, trace: &RunTrace) -> Vec<TraceLine> {
    let label = trace.config.policy.label();
    let mut lines = vec![TraceLine::new(run, &label, grid, 0, 0, &trace.initial)];
    for r in &trace.records {
        let mut line = TraceLine::new(run, &label, grid, r.iter, r.evaluations, &r.snapshot);
        line.chosen_index = Some(r.chosen_index);
        line.values = r.values.clone();
        lines.push(line);
    }
    lines
}

fn io_error(path: &Path, source: std::io::Error) -> BenchError {
    BenchError::Io { path: path.to_path_buf(), source }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, BenchError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| io_error(&path, source))?;
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("output records serialize")
}

fn create_dir(dir: &Path) -> Result<(), BenchError> {
    fs::create_dir_all(dir).map_err(|source| io_error(dir, source))
}

/// Writes traces, per-run metadata, the summary table and the resolved
/// config. Returns the paths written.
pub fn write_bench_outputs(outcome: &BenchOutcome, config: &BenchConfig, dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    create_dir(dir)?;
    let mut traces = String::new();
    let mut runs = String::new();
    for r in &outcome.runs {
        if let Some(trace) = &r.trace {
            for line in trace_lines(r.run, &outcome.grid, trace) {
                traces.push_str(&to_json(&line));
                traces.push('\n');
            }
        }
        let meta = serde_json::json!({
            "run": r.run,
            "policy": r.policy.label(),
            "seed": r.seed,
            "status": if r.error.is_none() { "completed" } else { "failed" },
            "error": r.error,
            "iterations": r.trace.as_ref().map(|t| t.records.len()),
            "objective": r.trace.as_ref().map(|t| t.objective.clone()),
            "noise_variance": r.trace.as_ref().map(|t| t.noise_variance),
            "standardization": r.trace.as_ref().map(|t| t.standardization),
            "initial_design": r.trace.as_ref().map(|t| &t.initial_design),
            "initial": r.trace.as_ref().map(|t| &t.initial),
            "final_hyperparameters": r.trace.as_ref().map(|t| &t.last().hyperparameters),
            "profile_builds": r.trace.as_ref().map(|t| t.profile_builds),
            "true_optimum_index": outcome.true_optimum_index,
            "true_optimum_value": outcome.true_optimum_value,
        });
        runs.push_str(&meta.to_string());
        runs.push('\n');
    }
    Ok(vec![
        write(dir, CONFIG_FILE, &config.to_toml_string())?,
        write(dir, TRACES_FILE, &traces)?,
        write(dir, RUNS_FILE, &runs)?,
        write(dir, SUMMARY_FILE, &outcome.summary.to_csv())?,
    ])
}

#[derive(Serialize)]
struct ProfileLine<'a> {
    virtual_batch: String,
    replicate: usize,
    seed: u64,
    paths: usize,
    base_entropy: f64,
    values: &'a [f64],
}

/// Writes every replicate profile, the ρ table, the report without the
/// profiles, and the resolved config.
pub fn write_study_outputs(
    report: &CriterionNoiseReport,
    config: &BenchConfig,
    dir: &Path,
) -> Result<Vec<PathBuf>, BenchError> {
    create_dir(dir)?;
    let mut profiles = String::new();
    let mut rho = String::from("virtual_batch,rho,mean_sd,range\n");
    for entry in &report.entries {
        for (replicate, p) in entry.profiles.iter().enumerate() {
            let line = ProfileLine {
                virtual_batch: p.virtual_batch.to_string(),
                replicate,
                seed: p.seed,
                paths: p.paths,
                base_entropy: p.base_entropy,
                values: &p.values,
            };
            profiles.push_str(&to_json(&line));
            profiles.push('\n');
        }
        let _ = writeln!(rho, "{},{:?},{:?},{:?}", entry.virtual_batch, entry.rho, entry.mean_sd, entry.range);
    }
    let mut summary = report.clone();
    for entry in &mut summary.entries {
        entry.profiles.clear();
    }
    let summary = serde_json::to_string_pretty(&summary).expect("report serializes") + "\n";
    Ok(vec![
        write(dir, CONFIG_FILE, &config.to_toml_string())?,
        write(dir, PROFILES_FILE, &profiles)?,
        write(dir, RHO_FILE, &rho)?,
        write(dir, REPORT_FILE, &summary)?,
    ])
}
