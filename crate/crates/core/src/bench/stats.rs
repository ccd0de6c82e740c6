use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Box-plot levels reported in summaries.
pub const SUMMARY_LEVELS: [f64; 5] = [5.0, 25.0, 50.0, 75.0, 95.0];

/// Linear-interpolation percentiles: level `p` sits at rank `p/100·(n−1)`
/// of the sorted samples.
pub fn percentiles(samples: &[f64], levels: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("percentiles of an empty sample".into()));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("percentiles of a sample containing NaN".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    levels
        .iter()
        .map(|&p| {
            if !(0.0..=100.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("percentile level {p} outside [0, 100]")));
            }
            let rank = p / 100.0 * (n - 1) as f64;
            let lo = rank.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = rank - lo as f64;
            Ok(if frac == 0.0 { sorted[lo] } else { sorted[lo] + frac * (sorted[hi] - sorted[lo]) })
        })
        .collect()
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub policy: String,
    pub checkpoint_n: usize,
    pub stat: String,
    pub p05: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
}

impl SummaryRow {
    pub fn new(policy: &str, checkpoint_n: usize, stat: &str, samples: &[f64]) -> Result<Self> {
        let p = percentiles(samples, &SUMMARY_LEVELS)?;
        Ok(Self {
            policy: policy.to_string(),
            checkpoint_n,
            stat: stat.to_string(),
            p05: p[0],
            p25: p[1],
            p50: p[2],
            p75: p[3],
            p95: p[4],
        })
    }

    pub fn levels(&self) -> [f64; 5] {
        [self.p05, self.p25, self.p50, self.p75, self.p95]
    }
}

/// Percentile table over completed runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub rows: Vec<SummaryRow>,
    pub completed_runs: usize,
    pub failed_runs: usize,
}

impl BenchmarkSummary {
    pub fn find(&self, policy: &str, checkpoint_n: usize, stat: &str) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.policy == policy && r.checkpoint_n == checkpoint_n && r.stat == stat)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("policy,checkpoint_n,stat,p05,p25,p50,p75,p95\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:?},{:?},{:?},{:?},{:?}\n",
                r.policy, r.checkpoint_n, r.stat, r.p05, r.p25, r.p50, r.p75, r.p95
            ));
        }
        out
    }
}
