use std::path::Path;
use std::sync::mpsc::Sender;

use rayon::prelude::*;

use super::io::{self, csv_string, spec_fields, SummaryRow};
use super::select::{rerun_experiment, select_best_row};
use super::{aggregate, AggregateResult, Experiment, InstanceSpec};
use crate::config::SweepConfig;
use crate::error::{Error, Result};
use crate::learners::Algorithm;

/// Instances dispatched to the pool between two merges.
const CHUNK: usize = 64;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONFIG_FILE: &str = "config.json";
pub const RAW_DIR: &str = "raw";
pub const RERUN_DIR: &str = "rerun";
pub const RERUN_INDEX: &str = "index.csv";

pub const RERUN_HEADER: [&str; 14] = [
    "algorithm",
    "alpha",
    "lambda",
    "eta",
    "beta",
    "zeta",
    "selected_auc_mean",
    "auc_mean",
    "auc_stderr",
    "final5_mean",
    "final5_stderr",
    "unstable",
    "diverged_runs",
    "curve",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Progress {
    Instances { done: usize, total: usize },
    Reruns { done: usize, total: usize },
}

/// Best instance of one (algorithm, λ) group re-executed on fresh seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct RerunRecord {
    pub selected: SummaryRow,
    pub fresh: AggregateResult,
    /// File name of the curve inside the rerun directory.
    pub curve: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutput {
    pub summary: Vec<SummaryRow>,
    pub reruns: Vec<RerunRecord>,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::config(format!("cannot start {workers} workers: {e}")))
}

fn notify(progress: Option<&Sender<Progress>>, p: Progress) {
    if let Some(tx) = progress {
        // A dropped receiver only means nobody is listening.
        let _ = tx.send(p);
    }
}

/// Executes the configured sweep. Results are merged in instance order, so
/// the output does not depend on `workers`. With `out`, files are written
/// by this thread only.
pub fn run_sweep(
    config: &SweepConfig,
    workers: usize,
    out: Option<&Path>,
    progress: Option<&Sender<Progress>>,
) -> Result<SweepOutput> {
    let grid = config.grid();
    let instances: Vec<InstanceSpec> = config
        .algorithms
        .iter()
        .flat_map(|&a| grid.expand(a))
        .collect();
    let pool = pool(workers)?;
    let experiment = pool.install(|| Experiment::new(config.settings()))?;

    let total = instances.len();
    let mut summary = Vec::with_capacity(total);
    for (c, chunk) in instances.chunks(CHUNK).enumerate() {
        let done: Vec<(SummaryRow, Vec<super::RunResult>)> = pool.install(|| {
            chunk
                .par_iter()
                .map(|spec| {
                    let results = experiment.execute(spec)?;
                    let agg = aggregate(&results)?;
                    Ok((SummaryRow::new(spec.clone(), &agg), results))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        for (i, (row, results)) in done.into_iter().enumerate() {
            if let (Some(dir), true) = (out, config.raw_curves) {
                let index = c * CHUNK + i;
                let name = format!("{index:05}_{}.csv", row.spec.algorithm);
                io::write_text(&dir.join(RAW_DIR).join(name), &io::raw_to_csv(&results))?;
            }
            summary.push(row);
        }
        notify(
            progress,
            Progress::Instances {
                done: summary.len(),
                total,
            },
        );
    }

    let reruns = if config.rerun {
        rerun_groups(config, &summary, &experiment, &pool, progress)?
    } else {
        Vec::new()
    };

    let output = SweepOutput { summary, reruns };
    if let Some(dir) = out {
        write_outputs(dir, config, &output)?;
    }
    Ok(output)
}

/// Groups by algorithm and `λ` (`ζ` for ABTD), in summary order.
fn groups(summary: &[SummaryRow]) -> Vec<(Algorithm, Option<f64>, Vec<&SummaryRow>)> {
    let mut out: Vec<(Algorithm, Option<f64>, Vec<&SummaryRow>)> = Vec::new();
    for row in summary {
        let key = (row.spec.algorithm, row.spec.lambda.or(row.spec.zeta));
        match out.iter_mut().find(|g| (g.0, g.1) == key) {
            Some(g) => g.2.push(row),
            None => out.push((key.0, key.1, vec![row])),
        }
    }
    out
}

fn rerun_groups(
    config: &SweepConfig,
    summary: &[SummaryRow],
    experiment: &Experiment,
    pool: &rayon::ThreadPool,
    progress: Option<&Sender<Progress>>,
) -> Result<Vec<RerunRecord>> {
    let fresh_data = pool.install(|| {
        rerun_experiment(
            &experiment.settings,
            config.rerun_runs(),
            config.rerun_seed_base(),
        )
    })?;
    let selected: Vec<(usize, SummaryRow)> = groups(summary)
        .into_iter()
        .enumerate()
        .map(|(i, (_, _, rows))| {
            let best = select_best_row(rows, config.rerun_criterion).ok_or(Error::NoCandidates)?;
            Ok((i, best.clone()))
        })
        .collect::<Result<_>>()?;
    let total = selected.len();
    notify(progress, Progress::Reruns { done: 0, total });
    let records = pool.install(|| {
        selected
            .par_iter()
            .map(|(i, row)| {
                let fresh = aggregate(&fresh_data.execute(&row.spec)?)?;
                Ok(RerunRecord {
                    selected: row.clone(),
                    fresh,
                    curve: format!("{i:03}_{}.csv", row.spec.algorithm),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    notify(progress, Progress::Reruns { done: total, total });
    Ok(records)
}

pub fn rerun_index_to_csv(records: &[RerunRecord]) -> String {
    let rows = records.iter().map(|r| {
        let mut row: Vec<String> = spec_fields(&r.selected.spec).to_vec();
        row.extend([
            io::fmt_f64(r.selected.auc_mean),
            io::fmt_f64(r.fresh.auc),
            io::fmt_f64(r.fresh.auc_stderr),
            io::fmt_f64(r.fresh.final5),
            io::fmt_f64(r.fresh.final5_stderr),
            r.fresh.unstable.to_string(),
            r.fresh.diverged_runs.to_string(),
            r.curve.clone(),
        ]);
        row
    });
    csv_string(&RERUN_HEADER, rows)
}

pub fn write_outputs(dir: &Path, config: &SweepConfig, output: &SweepOutput) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let recorded = SweepConfig {
        out: None,
        workers: None,
        ..config.resolved()
    };
    io::write_text(&dir.join(CONFIG_FILE), &recorded.to_json())?;
    io::write_summary(&dir.join(SUMMARY_FILE), &output.summary)?;
    if !output.reruns.is_empty() {
        let rerun_dir = dir.join(RERUN_DIR);
        io::write_text(
            &rerun_dir.join(RERUN_INDEX),
            &rerun_index_to_csv(&output.reruns),
        )?;
        for r in &output.reruns {
            io::write_text(&rerun_dir.join(&r.curve), &io::curve_to_csv(&r.fresh))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::mpsc;

    fn tiny() -> SweepConfig {
        SweepConfig::from_json(
            r#"{"algorithms": ["td", "gtd", "abtd"], "runs": 2, "steps": 300, "mu_samples": 20000,
                "grid": {"alpha": [0.5, 0.0625, 0.0078125], "lambda": [0, 1], "eta": [1, 4], "zeta": [0.5, 1]}}"#,
        )
        .unwrap()
    }

    #[test]
    fn summary_has_one_row_per_instance() {
        let c = tiny();
        let out = run_sweep(&c, 1, None, None).unwrap();
        assert_eq!(out.summary.len(), 6 + 12 + 6);
        assert_eq!(out.summary.len(), c.instance_count());
        // td×2 λ, gtd×2 λ, abtd×2 ζ
        assert_eq!(out.reruns.len(), 6);
        for r in &out.reruns {
            assert_eq!(r.fresh.runs, 2);
            assert_eq!(r.fresh.mean.len(), 301);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let c = tiny();
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        run_sweep(&c, 1, Some(dir1.path()), None).unwrap();
        run_sweep(&c, 3, Some(dir2.path()), None).unwrap();
        for f in [
            SUMMARY_FILE,
            CONFIG_FILE,
            "rerun/index.csv",
            "rerun/000_td.csv",
        ] {
            let a = std::fs::read(dir1.path().join(f)).unwrap();
            let b = std::fs::read(dir2.path().join(f)).unwrap();
            assert_eq!(a, b, "{f} differs");
        }
    }

    #[test]
    fn raw_curves_and_progress() {
        let mut c = tiny();
        c.algorithms = vec![Algorithm::Td];
        c.raw_curves = true;
        c.rerun = false;
        let dir = tempfile::tempdir().unwrap();
        let (tx, rx) = mpsc::channel();
        run_sweep(&c, 2, Some(dir.path()), Some(&tx)).unwrap();
        drop(tx);
        let last = rx.iter().last().unwrap();
        assert_eq!(last, Progress::Instances { done: 6, total: 6 });
        let raw = std::fs::read_to_string(dir.path().join("raw/00000_td.csv")).unwrap();
        let runs = io::parse_raw(Path::new("raw"), &raw).unwrap();
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[0].rve.len(), 301);
        assert!(!dir.path().join(RERUN_DIR).exists());
    }
}
