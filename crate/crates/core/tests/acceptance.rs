//! Acceptance suite: one PASS/FAIL line per criterion. With
//! `ACCEPTANCE_STRICT=1` the process exits nonzero if any criterion fails;
//! otherwise it only reports, so a workspace test run still reaches the
//! remaining targets.

use std::time::Instant;

use offpolicy::config::SweepConfig;
use offpolicy::harness::io::{summary_to_csv, SummaryRow};
use offpolicy::harness::{run_sweep, SweepOutput};
use offpolicy::learners::Algorithm;
use offpolicy::verify;

const LAMBDAS: [f64; 4] = [0.0, 0.5, 0.9, 1.0];

fn reduced_sweep() -> SweepConfig {
    let alpha: Vec<f64> = (-12..=0).map(|k| 2f64.powi(k)).collect();
    let eta: Vec<f64> = [-4, -2, 0, 2, 4].iter().map(|&k| 2f64.powi(k)).collect();
    SweepConfig {
        runs: 10,
        steps: 20_000,
        grid: offpolicy::config::GridOverrides {
            alpha: Some(alpha),
            lambda: Some(LAMBDAS.to_vec()),
            eta: Some(eta),
            beta: None,
            zeta: Some(LAMBDAS.to_vec()),
        },
        ..SweepConfig::default()
    }
}

struct Outcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

/// AUC of the best instance for `alg` at `lambda` (any `λ`/`ζ` when `None`),
/// re-estimated on the fresh rerun seeds.
fn best_auc(out: &SweepOutput, alg: Algorithm, lambda: Option<f64>) -> f64 {
    out.reruns
        .iter()
        .filter(|r| r.selected.spec.algorithm == alg)
        .filter(|r| {
            lambda.is_none_or(|l| r.selected.spec.lambda.or(r.selected.spec.zeta) == Some(l))
        })
        .map(|r| r.fresh.auc)
        .fold(f64::INFINITY, f64::min)
}

fn criterion_3(out: &SweepOutput) -> Outcome {
    use Algorithm::*;
    let mut notes = Vec::new();
    let mut ok = true;
    let mut check = |label: String, value: f64, pass: bool| {
        notes.push(format!(
            "{label}={value:.4}{}",
            if pass { "" } else { "(x)" }
        ));
        ok &= pass;
    };
    for alg in [Etd, EtdBeta] {
        let v = best_auc(out, alg, Some(0.0));
        check(format!("{alg}(0)"), v, within(v, 0.15, 0.04));
    }
    for alg in [Td, Gtd, Gtd2, Htd, Tdrc] {
        let v = best_auc(out, alg, Some(0.0));
        check(format!("{alg}(0)"), v, within(v, 0.32, 0.05));
    }
    for alg in [Td, Gtd, Gtd2, Htd, ProximalGtd2, Tdrc, Etd, EtdBeta] {
        let v = best_auc(out, alg, Some(1.0));
        check(format!("{alg}(1)"), v, v <= 0.13);
    }
    for alg in [TreeBackup, Vtrace, Abtd] {
        let v = best_auc(out, alg, None);
        check(format!("{alg}"), v, v >= 0.14 && within(v, 0.16, 0.04));
    }
    Outcome {
        name: "3 three-tier ordering (best AUC, rerun seeds)",
        passed: ok,
        detail: notes.join(" "),
    }
}

fn criterion_4(summary: &[SummaryRow]) -> Outcome {
    let mut td1: Vec<&SummaryRow> = summary
        .iter()
        .filter(|r| r.spec.algorithm == Algorithm::Td && r.spec.lambda == Some(1.0))
        .collect();
    td1.sort_by(|a, b| a.spec.alpha.total_cmp(&b.spec.alpha));
    let (mut run, mut longest) = (0, 0);
    for r in &td1 {
        run = if r.auc_mean <= 0.12 { run + 1 } else { 0 };
        longest = longest.max(run);
    }
    let good: Vec<String> = td1
        .iter()
        .filter(|r| r.auc_mean <= 0.12)
        .map(|r| format!("2^{}", r.spec.alpha.log2()))
        .collect();
    Outcome {
        name: "4 td(1) sweet spot",
        passed: longest >= 4,
        detail: format!(
            "{longest} consecutive step sizes with AUC <= 0.12 [{}]",
            good.join(",")
        ),
    }
}

fn main() {
    let mut outcomes = Vec::new();

    let t = Instant::now();
    let ve = verify::mean_reference_error(50, 0);
    outcomes.push(Outcome {
        name: "1 reference solution quality",
        passed: within(ve, 0.05, 0.015),
        detail: format!("mean VE(w*) over 50 maps = {ve:.5} (RVE {:.4})", ve.sqrt()),
    });

    let e0 = verify::initial_error();
    outcomes.push(Outcome {
        name: "2 initial error",
        passed: within(e0, 0.689, 0.001),
        detail: format!("RVE(0) = {e0:.6}"),
    });

    let config = reduced_sweep();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let sweep_start = Instant::now();
    let first = run_sweep(&config, workers, None, None).expect("reduced sweep runs");
    let sweep_secs = sweep_start.elapsed().as_secs_f64();
    outcomes.push(criterion_3(&first));
    outcomes.push(criterion_4(&first.summary));

    let mut worst = 0.0_f64;
    let mut notes = Vec::new();
    for r in verify::reductions() {
        let dev = r.deviation(1_000, 11);
        worst = worst.max(dev);
        if dev >= verify::REDUCTION_TOLERANCE {
            notes.push(format!("{}: {dev:.3e}", r.name));
        }
    }
    let abtd = verify::abtd_zeta_deviation(&[0.5, 0.75, 1.0], 1_000, 11);
    if abtd != 0.0 {
        notes.push(format!("abtd zeta: {abtd:.3e}"));
    }
    outcomes.push(Outcome {
        name: "5 exact reductions",
        passed: notes.is_empty(),
        detail: if notes.is_empty() {
            format!(
                "{} pairs plus abtd zeta, worst relative deviation {worst:.3e}",
                verify::reductions().len()
            )
        } else {
            notes.join("; ")
        },
    });

    let d = verify::divergence_report();
    outcomes.push(Outcome {
        name: "6 divergence counterexample",
        passed: d.passed(),
        detail: format!(
            "td(0) x{:.3e} within 200 steps; over 1e4 steps gtd x{:.3}, tdrc x{:.3}, etd x{:.3}",
            d.td, d.gtd, d.tdrc, d.etd
        ),
    });

    let gap = verify::state_distribution_gap(1_000_000, 0);
    outcomes.push(Outcome {
        name: "7 stationary distribution",
        passed: gap <= 0.005,
        detail: format!("max-norm gap {gap:.5}"),
    });

    let other_workers = if workers == 1 { 2 } else { 1 };
    let second = run_sweep(&config, other_workers, None, None).expect("reduced sweep runs");
    let (a, b) = (
        summary_to_csv(&first.summary),
        summary_to_csv(&second.summary),
    );
    outcomes.push(Outcome {
        name: "8 determinism across worker counts",
        passed: a == b && first.reruns == second.reruns,
        detail: format!(
            "{} rows, {workers} vs {other_workers} workers, {} bytes",
            first.summary.len(),
            a.len()
        ),
    });

    for o in &outcomes {
        println!(
            "{} criterion {}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!(
        "acceptance: {} of {} criteria passed (sweep {sweep_secs:.0}s, total {:.0}s)",
        outcomes.len() - failed,
        outcomes.len(),
        t.elapsed().as_secs_f64()
    );
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if failed > 0 && strict {
        std::process::exit(1);
    }
}
