use std::cmp::Ordering;

use super::{
    aggregate, AggregateResult, Criterion, Experiment, ExperimentSettings, InstanceSpec, SummaryRow,
};
use crate::error::{Error, Result};

fn param_key(spec: &InstanceSpec) -> [f64; 5] {
    let o = |x: Option<f64>| x.unwrap_or(f64::NEG_INFINITY);
    [
        spec.alpha,
        o(spec.lambda),
        o(spec.eta),
        o(spec.beta),
        o(spec.zeta),
    ]
}

/// Lower score first; ties go to smaller `α`, then smaller `λ`, `η`, `β`, `ζ`.
pub fn compare_candidates(a: (&InstanceSpec, f64), b: (&InstanceSpec, f64)) -> Ordering {
    a.1.total_cmp(&b.1).then_with(|| {
        param_key(a.0)
            .iter()
            .zip(param_key(b.0).iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

pub fn select_best_row<'a, I>(rows: I, criterion: Criterion) -> Option<&'a SummaryRow>
where
    I: IntoIterator<Item = &'a SummaryRow>,
{
    let score = |r: &SummaryRow| match criterion {
        Criterion::Auc => r.auc_mean,
        Criterion::Final5 => r.final5_mean,
    };
    rows.into_iter()
        .min_by(|a, b| compare_candidates((&a.spec, score(a)), (&b.spec, score(b))))
}

pub fn select_best(
    instances: &[(InstanceSpec, AggregateResult)],
    criterion: Criterion,
) -> Result<&InstanceSpec> {
    instances
        .iter()
        .min_by(|a, b| {
            compare_candidates((&a.0, a.1.score(criterion)), (&b.0, b.1.score(criterion)))
        })
        .map(|(spec, _)| spec)
        .ok_or(Error::NoCandidates)
}

/// Picks the best instance and reports only its aggregate on fresh data.
pub fn select_best_and_rerun(
    instances: &[(InstanceSpec, AggregateResult)],
    criterion: Criterion,
    rerun: &Experiment,
) -> Result<(InstanceSpec, AggregateResult)> {
    let best = select_best(instances, criterion)?.clone();
    let fresh = aggregate(&rerun.execute(&best)?)?;
    Ok((best, fresh))
}

/// Rerun data for `extra_runs` runs seeded from `seed_base`.
pub fn rerun_experiment(
    base: &ExperimentSettings,
    extra_runs: usize,
    seed_base: u64,
) -> Result<Experiment> {
    Experiment::new(ExperimentSettings {
        runs: extra_runs,
        seed_base,
        ..base.clone()
    })
}
