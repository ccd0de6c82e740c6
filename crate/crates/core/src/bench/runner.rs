use rayon::prelude::*;

use super::stats::{BenchmarkSummary, SummaryRow};
use super::{BenchConfig, BenchError};
use crate::gp::CandidateGrid;
use crate::optimizer::{run, Policy, RunTrace, Snapshot};
use crate::rng::derive_seed;
use crate::testbed::true_optimum;

/// One seeded run of one policy.
#[derive(Debug)]
pub struct RunOutcome {
    pub policy: Policy,
    pub run: usize,
    pub seed: u64,
    /// Full trace of a completed run, or the partial trace of a failed one.
    pub trace: Option<RunTrace>,
    pub error: Option<String>,
}

impl RunOutcome {
    pub fn completed(&self) -> Option<&RunTrace> {
        match (&self.trace, &self.error) {
            (Some(t), None) => Some(t),
            _ => None,
        }
    }
}

#[derive(Debug)]
pub struct BenchOutcome {
    /// Ordered by policy (config order), then run index.
    pub runs: Vec<RunOutcome>,
    pub summary: BenchmarkSummary,
    pub true_optimum_index: usize,
    pub true_optimum_value: f64,
    pub grid: CandidateGrid,
}

/// Runs every configured policy `config.runs` times. Run `r` of every policy
/// uses the seed derived from `(master seed, r)`, so policies face the same
/// noise stream.
pub fn bench(config: &BenchConfig) -> Result<BenchOutcome, BenchError> {
    let jobs = config.policies.len() * config.runs;
    bench_in_order(config, &(0..jobs).collect::<Vec<_>>())
}

/// Same as [`bench`] but launches the jobs in the given order; results do
/// not depend on it.
pub fn bench_in_order(config: &BenchConfig, order: &[usize]) -> Result<BenchOutcome, BenchError> {
    config.validate()?;
    let grid = config.grid()?;
    let objective = config.objective()?;
    let jobs = config.policies.len() * config.runs;
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..jobs).collect::<Vec<_>>() {
        return Err(BenchError::Config("job order is not a permutation of the jobs".into()));
    }

    let runs: Vec<RunOutcome> = order
        .par_iter()
        .map(|&job| {
            let policy = config.policies[job / config.runs];
            let run_index = job % config.runs;
            let seed = derive_seed(config.seed, &[run_index as u64]);
            let result = run(&config.optimizer_config(policy, seed), &grid, &objective);
            let (trace, error) = match result {
                Ok(trace) => (Some(trace), None),
                Err(e) => (e.trace.map(|t| *t), Some(e.source.to_string())),
            };
            (job, RunOutcome { policy, run: run_index, seed, trace, error })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<std::collections::BTreeMap<_, _>>()
        .into_values()
        .collect();

    let (true_index, true_value) = true_optimum(&objective);
    let summary = summarize(config, &grid, true_index, &runs)?;
    Ok(BenchOutcome { runs, summary, true_optimum_index: true_index, true_optimum_value: true_value, grid })
}

fn snapshot_at(trace: &RunTrace, n: usize) -> Option<&Snapshot> {
    if n == 0 {
        return Some(&trace.initial);
    }
    let k0 = trace.config.actual_batch;
    if n % k0 != 0 {
        return None;
    }
    trace.records.get(n / k0 - 1).map(|r| &r.snapshot)
}

/// Euclidean distance between two grid points.
pub(crate) fn distance(grid: &CandidateGrid, a: usize, b: usize) -> f64 {
    grid.point(a)
        .iter()
        .zip(grid.point(b))
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Scalar reported for x̂: the coordinate on 1-D grids, the index otherwise.
pub(crate) fn xhat_scalar(grid: &CandidateGrid, snap: &Snapshot) -> f64 {
    if grid.dim() == 1 {
        snap.xhat[0]
    } else {
        snap.xhat_index as f64
    }
}

/// Percentiles of x̂, M̂, H and |x̂ − x*| per policy and checkpoint over the
/// completed runs.
pub fn summarize(
    config: &BenchConfig,
    grid: &CandidateGrid,
    true_index: usize,
    runs: &[RunOutcome],
) -> Result<BenchmarkSummary, BenchError> {
    let mut rows = Vec::new();
    for policy in &config.policies {
        let label = policy.label();
        let traces: Vec<&RunTrace> = runs
            .iter()
            .filter(|r| r.policy == *policy)
            .filter_map(RunOutcome::completed)
            .collect();
        if traces.is_empty() {
            continue;
        }
        for n in config.checkpoints() {
            let snaps: Vec<&Snapshot> = traces.iter().filter_map(|t| snapshot_at(t, n)).collect();
            if snaps.is_empty() {
                continue;
            }
            let xhat: Vec<f64> = snaps.iter().map(|s| xhat_scalar(grid, s)).collect();
            let mhat: Vec<f64> = snaps.iter().map(|s| s.mhat).collect();
            let h: Vec<f64> = snaps.iter().map(|s| s.entropy).collect();
            let xerr: Vec<f64> = snaps.iter().map(|s| distance(grid, s.xhat_index, true_index)).collect();
            for (stat, samples) in [("xhat", &xhat), ("Mhat", &mhat), ("H", &h), ("xerr", &xerr)] {
                rows.push(SummaryRow::new(&label, n, stat, samples)?);
            }
        }
    }
    let completed_runs = runs.iter().filter(|r| r.completed().is_some()).count();
    Ok(BenchmarkSummary { rows, completed_runs, failed_runs: runs.len() - completed_runs })
}
