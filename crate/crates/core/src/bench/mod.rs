//! Experiment harness: configuration, the criterion-noise study, the
//! multi-run policy benchmark and their plot-ready output files.

mod config;
mod io;
mod runner;
mod stats;
mod study;

pub use config::{BenchConfig, MAX_GRID_POINTS, MAX_ITERATIONS, CriterionNoiseConfig, GridConfig, LoopConfig, ModelConfig, ObjectiveConfig};
pub use io::{
    parse_trace_line, read_traces, write_bench_outputs, write_study_outputs, TraceLine, CONFIG_FILE, PROFILES_FILE,
    REPORT_FILE, RHO_FILE, RUNS_FILE, SUMMARY_FILE, TRACES_FILE,
};
pub use runner::{bench, bench_in_order, summarize, BenchOutcome, RunOutcome};
pub use stats::{percentiles, BenchmarkSummary, SummaryRow, SUMMARY_LEVELS};
pub use study::{criterion_noise_study, dispersion_ratio, prepare_fixture, CriterionNoiseReport, Fixture, StudyEntry};

/// Errors of the harness, split by the exit status the CLI reports.
#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Numerical(#[from] crate::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}
