use std::fs;
use std::path::Path;

use super::{AggregateResult, RunResult};
use crate::error::{Error, Result};
use crate::learners::{Algorithm, LearnerConfig};

pub const SUMMARY_HEADER: [&str; 12] = [
    "algorithm",
    "alpha",
    "lambda",
    "eta",
    "beta",
    "zeta",
    "auc_mean",
    "auc_stderr",
    "final5_mean",
    "final5_stderr",
    "unstable",
    "diverged_runs",
];

pub const RAW_HEADER: [&str; 3] = ["run", "step", "rve"];
pub const CURVE_HEADER: [&str; 3] = ["step", "rve_mean", "rve_stderr"];

/// 17 significant digits in scientific notation, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// One line of the summary CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub spec: LearnerConfig,
    pub auc_mean: f64,
    pub auc_stderr: f64,
    pub final5_mean: f64,
    pub final5_stderr: f64,
    pub unstable: bool,
    pub diverged_runs: usize,
}

impl SummaryRow {
    pub fn new(spec: LearnerConfig, agg: &AggregateResult) -> Self {
        SummaryRow {
            spec,
            auc_mean: agg.auc,
            auc_stderr: agg.auc_stderr,
            final5_mean: agg.final5,
            final5_stderr: agg.final5_stderr,
            unstable: agg.unstable,
            diverged_runs: agg.diverged_runs,
        }
    }

    fn record(&self) -> [String; 12] {
        let s = &self.spec;
        [
            s.algorithm.id().to_string(),
            fmt_f64(s.alpha),
            fmt_opt(s.lambda),
            fmt_opt(s.eta),
            fmt_opt(s.beta),
            fmt_opt(s.zeta),
            fmt_f64(self.auc_mean),
            fmt_f64(self.auc_stderr),
            fmt_f64(self.final5_mean),
            fmt_f64(self.final5_stderr),
            self.unstable.to_string(),
            self.diverged_runs.to_string(),
        ]
    }
}

/// Parameter columns shared by the summary and several reports.
pub(crate) fn spec_fields(spec: &LearnerConfig) -> [String; 6] {
    [
        spec.algorithm.id().to_string(),
        fmt_f64(spec.alpha),
        fmt_opt(spec.lambda),
        fmt_opt(spec.eta),
        fmt_opt(spec.beta),
        fmt_opt(spec.zeta),
    ]
}

pub(crate) fn csv_string<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is utf-8")
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    csv_string(&SUMMARY_HEADER, rows.iter().map(SummaryRow::record))
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_text(path, &summary_to_csv(rows))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse<T: std::str::FromStr>(
    path: &Path,
    record: &csv::StringRecord,
    i: usize,
    name: &str,
) -> Result<T> {
    record.get(i).and_then(|f| f.parse().ok()).ok_or_else(|| {
        Error::format(
            path,
            format!(
                "bad `{name}` value in line {:?}",
                record.position().map(|p| p.line())
            ),
        )
    })
}

fn parse_opt(path: &Path, record: &csv::StringRecord, i: usize, name: &str) -> Result<Option<f64>> {
    match record.get(i) {
        Some("") => Ok(None),
        _ => parse(path, record, i, name).map(Some),
    }
}

fn check_header(path: &Path, reader: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<()> {
    let header = reader.headers().map_err(|e| Error::csv(path, e))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::format(
            path,
            format!("expected header `{}`", expected.join(",")),
        ));
    }
    Ok(())
}

/// Reads the instance columns starting at `offset`.
pub(crate) fn parse_spec(
    path: &Path,
    r: &csv::StringRecord,
    offset: usize,
) -> Result<LearnerConfig> {
    let algorithm: Algorithm = r
        .get(offset)
        .ok_or_else(|| Error::format(path, "missing algorithm"))?
        .parse()?;
    let spec = LearnerConfig {
        algorithm,
        alpha: parse(path, r, offset + 1, "alpha")?,
        lambda: parse_opt(path, r, offset + 2, "lambda")?,
        eta: parse_opt(path, r, offset + 3, "eta")?,
        beta: parse_opt(path, r, offset + 4, "beta")?,
        zeta: parse_opt(path, r, offset + 5, "zeta")?,
        tdrc_reg: None,
    };
    spec.validate()
        .map_err(|e| Error::format(path, e.to_string()))?;
    Ok(spec)
}

pub fn parse_summary(path: &Path, text: &str) -> Result<Vec<SummaryRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    check_header(path, &mut reader, &SUMMARY_HEADER)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record.map_err(|e| Error::csv(path, e))?;
        rows.push(SummaryRow {
            spec: parse_spec(path, &r, 0)?,
            auc_mean: parse(path, &r, 6, "auc_mean")?,
            auc_stderr: parse(path, &r, 7, "auc_stderr")?,
            final5_mean: parse(path, &r, 8, "final5_mean")?,
            final5_stderr: parse(path, &r, 9, "final5_stderr")?,
            unstable: parse(path, &r, 10, "unstable")?,
            diverged_runs: parse(path, &r, 11, "diverged_runs")?,
        });
    }
    Ok(rows)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    parse_summary(path, &read_text(path)?)
}

/// Per-run curves of one instance as `run,step,rve`.
pub fn raw_to_csv(results: &[RunResult]) -> String {
    let rows = results.iter().flat_map(|r| {
        r.rve
            .iter()
            .enumerate()
            .map(move |(t, x)| [r.run_index.to_string(), t.to_string(), fmt_f64(*x)])
    });
    csv_string(&RAW_HEADER, rows)
}

pub fn parse_raw(path: &Path, text: &str) -> Result<Vec<RunResult>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    check_header(path, &mut reader, &RAW_HEADER)?;
    let mut runs: Vec<RunResult> = Vec::new();
    for record in reader.records() {
        let r = record.map_err(|e| Error::csv(path, e))?;
        let run: usize = parse(path, &r, 0, "run")?;
        let step: usize = parse(path, &r, 1, "step")?;
        let rve: f64 = parse(path, &r, 2, "rve")?;
        if runs.last().is_none_or(|last| last.run_index != run) {
            runs.push(RunResult {
                run_index: run,
                rve: Vec::new(),
                diverged: false,
            });
        }
        let current = runs.last_mut().expect("pushed above");
        if step != current.rve.len() {
            return Err(Error::format(
                path,
                format!("run {run}: steps out of order at {step}"),
            ));
        }
        current.rve.push(rve);
    }
    Ok(runs)
}

/// Mean and standard-error curve as `step,rve_mean,rve_stderr`.
pub fn curve_to_csv(agg: &AggregateResult) -> String {
    let rows = agg
        .mean
        .iter()
        .zip(&agg.stderr)
        .enumerate()
        .map(|(t, (m, s))| [t.to_string(), fmt_f64(*m), fmt_f64(*s)]);
    csv_string(&CURVE_HEADER, rows)
}

pub fn parse_curve(path: &Path, text: &str) -> Result<Vec<(usize, f64, f64)>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    check_header(path, &mut reader, &CURVE_HEADER)?;
    reader
        .records()
        .map(|record| {
            let r = record.map_err(|e| Error::csv(path, e))?;
            Ok((
                parse(path, &r, 0, "step")?,
                parse(path, &r, 1, "rve_mean")?,
                parse(path, &r, 2, "rve_stderr")?,
            ))
        })
        .collect()
}
