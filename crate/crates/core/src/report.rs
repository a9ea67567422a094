//! Tables derived from sweep output files. Reports never rerun learning:
//! they read `summary.csv` and the rerun curves only.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::io::{
    self, csv_string, fmt_f64, parse_spec, read_text, spec_fields, SummaryRow,
};
use crate::harness::{compare_candidates, RERUN_DIR, RERUN_HEADER, RERUN_INDEX, SUMMARY_FILE};
use crate::learners::{Algorithm, LearnerConfig};

/// Error shown for unstable instances in waterfall plots.
pub const WATERFALL_CEILING: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportKind {
    Sensitivity,
    LearningCurve,
    Waterfall,
    EmphaticBeta,
    GradientEta,
}

impl ReportKind {
    pub const ALL: [ReportKind; 5] = [
        ReportKind::Sensitivity,
        ReportKind::LearningCurve,
        ReportKind::Waterfall,
        ReportKind::EmphaticBeta,
        ReportKind::GradientEta,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ReportKind::Sensitivity => "sensitivity",
            ReportKind::LearningCurve => "learning-curve",
            ReportKind::Waterfall => "waterfall",
            ReportKind::EmphaticBeta => "emphatic-beta",
            ReportKind::GradientEta => "gradient-eta",
        }
    }
}

impl fmt::Display for ReportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ReportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ReportKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::config(format!("unknown report kind `{s}`")))
    }
}

/// Restricts sensitivity and learning-curve reports to one `λ` (or `ζ`).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReportOptions {
    pub lambda: Option<f64>,
}

/// `λ`, or `ζ` for ABTD.
fn trace_param(spec: &LearnerConfig) -> Option<f64> {
    spec.lambda.or(spec.zeta)
}

fn matches(opts: &ReportOptions, spec: &LearnerConfig) -> bool {
    opts.lambda.is_none_or(|l| trace_param(spec) == Some(l))
}

fn total(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NEG_INFINITY)
}

/// Algorithms in order of first appearance.
fn algorithms(rows: &[SummaryRow]) -> Vec<Algorithm> {
    let mut out: Vec<Algorithm> = Vec::new();
    for r in rows {
        if !out.contains(&r.spec.algorithm) {
            out.push(r.spec.algorithm);
        }
    }
    out
}

fn sorted_values(values: impl Iterator<Item = Option<f64>>) -> Vec<Option<f64>> {
    let mut v: Vec<Option<f64>> = values.collect();
    v.sort_by(|a, b| total(*a).total_cmp(&total(*b)));
    v.dedup();
    v
}

pub const SENSITIVITY_HEADER: [&str; 9] = [
    "algorithm",
    "lambda",
    "zeta",
    "eta",
    "beta",
    "alpha",
    "auc_mean",
    "auc_stderr",
    "unstable",
];

/// AUC against `α` for every algorithm and `λ`. Where `η` or `β` is also
/// swept, only the value whose best `α` gives the lowest AUC is kept.
pub fn sensitivity(rows: &[SummaryRow], opts: &ReportOptions) -> String {
    let mut out = Vec::new();
    for alg in algorithms(rows) {
        let of_alg: Vec<&SummaryRow> = rows
            .iter()
            .filter(|r| r.spec.algorithm == alg && matches(opts, &r.spec))
            .collect();
        for lambda in sorted_values(of_alg.iter().map(|r| trace_param(&r.spec))) {
            let group: Vec<&SummaryRow> = of_alg
                .iter()
                .copied()
                .filter(|r| trace_param(&r.spec) == lambda)
                .collect();
            let best = group
                .iter()
                .min_by(|a, b| compare_candidates((&a.spec, a.auc_mean), (&b.spec, b.auc_mean)))
                .copied()
                .expect("group is non-empty");
            let mut curve: Vec<&SummaryRow> = group
                .into_iter()
                .filter(|r| r.spec.eta == best.spec.eta && r.spec.beta == best.spec.beta)
                .collect();
            curve.sort_by(|a, b| a.spec.alpha.total_cmp(&b.spec.alpha));
            for r in curve {
                let s = &r.spec;
                out.push([
                    alg.id().to_string(),
                    s.lambda.map(fmt_f64).unwrap_or_default(),
                    s.zeta.map(fmt_f64).unwrap_or_default(),
                    s.eta.map(fmt_f64).unwrap_or_default(),
                    s.beta.map(fmt_f64).unwrap_or_default(),
                    fmt_f64(s.alpha),
                    fmt_f64(r.auc_mean),
                    fmt_f64(r.auc_stderr),
                    r.unstable.to_string(),
                ]);
            }
        }
    }
    csv_string(&SENSITIVITY_HEADER, out)
}

pub const WATERFALL_HEADER: [&str; 9] = [
    "algorithm",
    "alpha",
    "lambda",
    "eta",
    "beta",
    "zeta",
    "auc_mean",
    "unstable",
    "display_error",
];

/// Every instance sorted by displayed error within its algorithm. Comment
/// lines `# unstable_pct,<algorithm>,<percent>` precede the header.
pub fn waterfall(rows: &[SummaryRow]) -> String {
    let display = |r: &SummaryRow| {
        if r.unstable {
            WATERFALL_CEILING
        } else {
            r.auc_mean
        }
    };
    let mut meta = String::new();
    let mut out = Vec::new();
    for alg in algorithms(rows) {
        let mut group: Vec<&SummaryRow> = rows.iter().filter(|r| r.spec.algorithm == alg).collect();
        let unstable = group.iter().filter(|r| r.unstable).count();
        let pct = 100.0 * unstable as f64 / group.len() as f64;
        meta.push_str(&format!("# unstable_pct,{alg},{}\n", fmt_f64(pct)));
        group.sort_by(|a, b| compare_candidates((&a.spec, display(a)), (&b.spec, display(b))));
        for r in group {
            let mut row = spec_fields(&r.spec).to_vec();
            row.extend([
                fmt_f64(r.auc_mean),
                r.unstable.to_string(),
                fmt_f64(display(r)),
            ]);
            out.push(row);
        }
    }
    meta + &csv_string(&WATERFALL_HEADER, out)
}

fn parameter_detail(
    rows: &[SummaryRow],
    header: &[&str],
    keep: impl Fn(Algorithm) -> bool,
    param: impl Fn(&LearnerConfig) -> Option<f64>,
) -> String {
    let mut selected: Vec<&SummaryRow> = rows.iter().filter(|r| keep(r.spec.algorithm)).collect();
    selected.sort_by(|a, b| {
        let key = |r: &SummaryRow| {
            [
                total(trace_param(&r.spec)),
                total(param(&r.spec)),
                r.spec.alpha,
            ]
        };
        a.spec.algorithm.cmp(&b.spec.algorithm).then_with(|| {
            key(a)
                .iter()
                .zip(key(b).iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let out = selected.into_iter().map(|r| {
        [
            r.spec.algorithm.id().to_string(),
            r.spec.lambda.map(fmt_f64).unwrap_or_default(),
            param(&r.spec).map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.spec.alpha),
            fmt_f64(r.auc_mean),
            fmt_f64(r.auc_stderr),
            r.unstable.to_string(),
        ]
    });
    csv_string(header, out)
}

pub const EMPHATIC_BETA_HEADER: [&str; 7] = [
    "algorithm",
    "lambda",
    "beta",
    "alpha",
    "auc_mean",
    "auc_stderr",
    "unstable",
];

/// ETD(λ, β) for every `β`, with ETD(λ) (empty `beta`) for reference.
pub fn emphatic_beta(rows: &[SummaryRow]) -> String {
    parameter_detail(
        rows,
        &EMPHATIC_BETA_HEADER,
        |a| matches!(a, Algorithm::Etd | Algorithm::EtdBeta),
        |s| s.beta,
    )
}

pub const GRADIENT_ETA_HEADER: [&str; 7] = [
    "algorithm",
    "lambda",
    "eta",
    "alpha",
    "auc_mean",
    "auc_stderr",
    "unstable",
];

/// Gradient-TD learners for every `η`. TDRC's `η` is fixed and left empty.
pub fn gradient_eta(rows: &[SummaryRow]) -> String {
    parameter_detail(
        rows,
        &GRADIENT_ETA_HEADER,
        Algorithm::has_secondary_weights,
        |s| s.eta,
    )
}

pub const LEARNING_CURVE_HEADER: [&str; 9] = [
    "algorithm",
    "alpha",
    "lambda",
    "eta",
    "beta",
    "zeta",
    "step",
    "rve_mean",
    "rve_stderr",
];

/// Rerun curves of the best instance per algorithm and `λ`.
pub fn learning_curve(input: &Path, opts: &ReportOptions) -> Result<String> {
    let dir = input.join(RERUN_DIR);
    let index_path = dir.join(RERUN_INDEX);
    let text = read_text(&index_path)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::csv(&index_path, e))?;
    if header.iter().ne(RERUN_HEADER.iter().copied()) {
        return Err(Error::format(&index_path, "unexpected rerun index header"));
    }
    let curve_col = RERUN_HEADER.len() - 1;
    let mut out = Vec::new();
    for record in reader.records() {
        let r = record.map_err(|e| Error::csv(&index_path, e))?;
        let spec = parse_spec(&index_path, &r, 0)?;
        if !matches(opts, &spec) {
            continue;
        }
        let name = r
            .get(curve_col)
            .filter(|n| !n.is_empty() && !n.contains(['/', '\\']))
            .ok_or_else(|| Error::format(&index_path, "bad curve file name"))?;
        let curve_path = dir.join(name);
        let params = spec_fields(&spec);
        for (step, mean, stderr) in io::parse_curve(&curve_path, &read_text(&curve_path)?)? {
            let mut row = params.to_vec();
            row.extend([step.to_string(), fmt_f64(mean), fmt_f64(stderr)]);
            out.push(row);
        }
    }
    Ok(csv_string(&LEARNING_CURVE_HEADER, out))
}

/// Report text for `kind` computed from the sweep directory `input`.
pub fn generate(kind: ReportKind, input: &Path, opts: &ReportOptions) -> Result<String> {
    if kind == ReportKind::LearningCurve {
        return learning_curve(input, opts);
    }
    let rows = io::read_summary(&input.join(SUMMARY_FILE))?;
    if rows.is_empty() {
        return Err(Error::format(
            input.join(SUMMARY_FILE),
            "summary has no rows",
        ));
    }
    Ok(match kind {
        ReportKind::Sensitivity => sensitivity(&rows, opts),
        ReportKind::Waterfall => waterfall(&rows),
        ReportKind::EmphaticBeta => emphatic_beta(&rows),
        ReportKind::GradientEta => gradient_eta(&rows),
        ReportKind::LearningCurve => unreachable!("handled above"),
    })
}

pub fn write_report(
    kind: ReportKind,
    input: &Path,
    output: &Path,
    opts: &ReportOptions,
) -> Result<()> {
    let text = generate(kind, input, opts)?;
    io::write_text(output, &text)
}
