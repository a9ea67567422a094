use serde::{Deserialize, Serialize};

use super::RunResult;
use crate::error::{Error, Result};

/// Cross-run statistics of one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateResult {
    pub runs: usize,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Mean over runs of each run's average RVE over steps `1..=steps`.
    pub auc: f64,
    pub auc_stderr: f64,
    /// Same, restricted to the last 5% of the steps.
    pub final5: f64,
    pub final5_stderr: f64,
    /// Mean RVE at step 0.
    pub initial: f64,
    pub unstable: bool,
    pub diverged_runs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Auc,
    Final5,
}

impl AggregateResult {
    pub fn score(&self, criterion: Criterion) -> f64 {
        match criterion {
            Criterion::Auc => self.auc,
            Criterion::Final5 => self.final5,
        }
    }
}

/// Number of trailing steps averaged by the final-5% measure.
pub fn final5_len(steps: usize) -> usize {
    steps.div_ceil(20).max(1)
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-run average over steps `1..`; a zero-step run averages its only value.
/// Summing offsets from the first value keeps a constant curve's average
/// exactly equal to that constant.
fn curve_average(rve: &[f64], tail: usize) -> f64 {
    let body = if rve.len() > 1 { &rve[1..] } else { rve };
    let tail = &body[body.len() - tail.min(body.len())..];
    let base = tail[0];
    base + tail.iter().map(|x| x - base).sum::<f64>() / tail.len() as f64
}

/// Statistics over `results`, summed in run-index order so that the input
/// order does not matter.
pub fn aggregate(results: &[RunResult]) -> Result<AggregateResult> {
    if results.is_empty() {
        return Err(Error::EmptyResults);
    }
    let mut sorted: Vec<&RunResult> = results.iter().collect();
    sorted.sort_by_key(|r| r.run_index);
    let len = sorted[0].rve.len();
    if len == 0 || sorted.iter().any(|r| r.rve.len() != len) {
        return Err(Error::config("runs have inconsistent curve lengths"));
    }
    let steps = len - 1;

    let mut mean = Vec::with_capacity(len);
    let mut stderr = Vec::with_capacity(len);
    let mut column = Vec::with_capacity(sorted.len());
    for t in 0..len {
        column.clear();
        column.extend(sorted.iter().map(|r| r.rve[t]));
        let (m, s) = mean_stderr(&column);
        mean.push(m);
        stderr.push(s);
    }

    let aucs: Vec<f64> = sorted
        .iter()
        .map(|r| curve_average(&r.rve, usize::MAX))
        .collect();
    let finals: Vec<f64> = sorted
        .iter()
        .map(|r| curve_average(&r.rve, final5_len(steps)))
        .collect();
    let (auc, auc_stderr) = mean_stderr(&aucs);
    let (final5, final5_stderr) = mean_stderr(&finals);
    let mut agg = AggregateResult {
        runs: sorted.len(),
        initial: mean[0],
        mean,
        stderr,
        auc,
        auc_stderr,
        final5,
        final5_stderr,
        unstable: false,
        diverged_runs: sorted.iter().filter(|r| r.diverged).count(),
    };
    agg.unstable = flag_unstable(&agg);
    Ok(agg)
}

/// Unstable when the average error exceeds the error before learning.
pub fn flag_unstable(agg: &AggregateResult) -> bool {
    agg.auc > agg.initial
}
