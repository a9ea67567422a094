//! Built-in self-checks: scalar oracles, exact reductions between learners,
//! the divergence counterexample, a gradient check and environment oracles.
//!
//! Checks that compare learners take the step functions as values, so a
//! deliberately broken learner can be substituted to confirm a check fails.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::config::SweepConfig;
use crate::env::{
    generate_feature_map, rve, sample_stream, solve_wstar, stationary_distribution_analytic,
    stationary_distribution_sampled, true_values, ve, Action, CollisionTask, Transition,
};
use crate::harness::{self, io::summary_to_csv, rerun_index_to_csv, run_sweep};
use crate::learners::{self as l, AbtdScale, LearnerState, StepFn, StepParams};
use crate::seeding::{rng_for, Purpose};

/// Tolerance for exact reductions and the ratio-placement equivalence.
pub const REDUCTION_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

/// A transition that owns its feature vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct OwnedTransition {
    pub x: Vec<f64>,
    pub x_next: Vec<f64>,
    pub reward: f64,
    pub gamma_next: f64,
    pub pi: f64,
    pub b: f64,
}

impl OwnedTransition {
    pub fn as_transition(&self) -> Transition<'_> {
        Transition::new(
            &self.x,
            self.reward,
            &self.x_next,
            self.gamma_next,
            self.pi,
            self.b,
        )
    }

    fn from_transition(t: &Transition<'_>) -> Self {
        OwnedTransition {
            x: t.x.to_vec(),
            x_next: t.x_next.to_vec(),
            reward: t.reward,
            gamma_next: t.gamma_next,
            pi: t.pi,
            b: t.b,
        }
    }
}

/// Collision behavior stream. With `on_policy` the behavior policy is also
/// the target, so every ratio is 1.
pub fn collision_stream(steps: usize, seed: u64, on_policy: bool) -> Vec<OwnedTransition> {
    let task = CollisionTask::default();
    let b = task.behavior_policy();
    let pi = if on_policy {
        b.clone()
    } else {
        task.target_policy()
    };
    let fm = generate_feature_map(seed, 6, 3).expect("valid feature shape");
    sample_stream(&task, &b, &pi, steps, seed)
        .iter()
        .map(|e| OwnedTransition::from_transition(&e.transition(&fm)))
        .collect()
}

/// Random binary features, rewards in `[-1, 1)`, discounts from
/// `{0, 0.5, 0.9, 1}` and arbitrary action probabilities. With
/// `ratio_at_most_one` every `π ≤ b`.
pub fn synthetic_stream(
    steps: usize,
    dim: usize,
    seed: u64,
    ratio_at_most_one: bool,
) -> Vec<OwnedTransition> {
    let mut rng = rng_for(seed, Purpose::Synthetic);
    (0..steps)
        .map(|_| {
            let binary = |rng: &mut rand_chacha::ChaCha8Rng| {
                (0..dim)
                    .map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 })
                    .collect::<Vec<f64>>()
            };
            let x = binary(&mut rng);
            let gamma_next = [0.0, 0.5, 0.9, 1.0][rng.random_range(0..4)];
            let x_next = if gamma_next == 0.0 {
                vec![0.0; dim]
            } else {
                binary(&mut rng)
            };
            let b = rng.random_range(0.2..=1.0);
            let u: f64 = rng.random();
            OwnedTransition {
                x,
                x_next,
                reward: rng.random_range(-1.0..1.0),
                gamma_next,
                pi: if ratio_at_most_one { u * b } else { u },
                b,
            }
        })
        .collect()
}

/// Largest `‖w_a − w_b‖∞` over the stream, relative to the largest weight
/// magnitude seen so far. 0 means bit-identical trajectories; non-finite
/// weights count as an infinite deviation unless both sides agree bitwise.
pub fn weight_deviation(
    stream: &[OwnedTransition],
    a: (StepFn, StepParams),
    b: (StepFn, StepParams),
) -> f64 {
    let dim = stream.first().map_or(0, |t| t.x.len());
    let mut sa = LearnerState::new(dim);
    let mut sb = LearnerState::new(dim);
    let mut scale = 0.0_f64;
    let mut worst = 0.0_f64;
    for t in stream {
        let t = t.as_transition();
        a.0(&mut sa, &a.1, &t);
        b.0(&mut sb, &b.1, &t);
        if sa
            .w
            .iter()
            .zip(&sb.w)
            .all(|(x, y)| x.to_bits() == y.to_bits())
        {
            scale = scale.max(sa.max_abs_weight());
            continue;
        }
        if !sa.is_finite() || !sb.is_finite() {
            return f64::INFINITY;
        }
        scale = scale.max(sa.max_abs_weight()).max(sb.max_abs_weight());
        let diff =
            sa.w.iter()
                .zip(&sb.w)
                .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        worst = worst.max(diff / scale);
    }
    worst
}

pub fn params(alpha: f64, lambda: f64) -> StepParams {
    StepParams {
        alpha,
        alpha_v: alpha,
        lambda,
        beta: 0.0,
        tdrc_reg: 1.0,
        psi: 0.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamKind {
    /// Collision, behavior policy against the always-forward target.
    OffPolicy,
    /// Collision with target equal to behavior.
    OnPolicy,
    /// Synthetic transitions with arbitrary ratios.
    Synthetic,
    /// Synthetic transitions with every `π ≤ b`.
    RatiosAtMostOne,
}

/// Two learners that must produce identical weights on a stream.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub name: &'static str,
    pub stream: StreamKind,
    pub lambdas: Vec<f64>,
    pub a: (StepFn, StepParams),
    pub b: (StepFn, StepParams),
}

impl Reduction {
    fn stream(&self, steps: usize, seed: u64) -> Vec<OwnedTransition> {
        match self.stream {
            StreamKind::OffPolicy => collision_stream(steps, seed, false),
            StreamKind::OnPolicy => collision_stream(steps, seed, true),
            StreamKind::Synthetic => synthetic_stream(steps, 6, seed, false),
            StreamKind::RatiosAtMostOne => synthetic_stream(steps, 6, seed, true),
        }
    }

    /// Worst deviation over all `λ` values, on a `steps`-long stream.
    pub fn deviation(&self, steps: usize, seed: u64) -> f64 {
        let stream = self.stream(steps, seed);
        self.lambdas
            .iter()
            .map(|&lambda| {
                let with = |(f, p): (StepFn, StepParams)| (f, StepParams { lambda, ..p });
                weight_deviation(&stream, with(self.a), with(self.b))
            })
            .fold(0.0, f64::max)
    }
}

const ALPHA: f64 = 0.05;
const LAMBDAS: [f64; 5] = [0.0, 0.5, 0.9, 0.984375, 1.0];

/// The ratio-placement pair plus every exact reduction between learners.
pub fn reductions() -> Vec<Reduction> {
    let p = params(ALPHA, 0.0);
    let all = LAMBDAS.to_vec();
    vec![
        Reduction {
            name: "ratio in trace equals ratio in update",
            stream: StreamKind::OffPolicy,
            lambdas: all.clone(),
            a: (l::offpolicy_td, p),
            b: (l::offpolicy_td_rho_on_update, p),
        },
        Reduction {
            name: "ratio placement on synthetic transitions",
            stream: StreamKind::Synthetic,
            lambdas: all.clone(),
            a: (l::offpolicy_td, StepParams { alpha: 0.01, ..p }),
            b: (
                l::offpolicy_td_rho_on_update,
                StepParams { alpha: 0.01, ..p },
            ),
        },
        Reduction {
            name: "htd is td on-policy",
            stream: StreamKind::OnPolicy,
            lambdas: all.clone(),
            a: (l::htd, p),
            b: (l::offpolicy_td, p),
        },
        Reduction {
            name: "etd(lambda, 0) is td(lambda)",
            stream: StreamKind::OffPolicy,
            lambdas: all.clone(),
            a: (l::etd_beta, p),
            b: (l::offpolicy_td, p),
        },
        Reduction {
            name: "etd(lambda, gamma) is etd(lambda)",
            stream: StreamKind::OffPolicy,
            lambdas: all.clone(),
            a: (l::etd_beta, StepParams { beta: 0.9, ..p }),
            b: (l::etd, p),
        },
        Reduction {
            name: "tdrc without regularization is gtd",
            stream: StreamKind::OffPolicy,
            lambdas: all.clone(),
            a: (l::tdrc, StepParams { tdrc_reg: 0.0, ..p }),
            b: (l::gtd, p),
        },
        Reduction {
            name: "gtd(1) is td(1)",
            stream: StreamKind::OffPolicy,
            lambdas: vec![1.0],
            a: (l::gtd, p),
            b: (l::offpolicy_td, p),
        },
        Reduction {
            name: "vtrace is ratio-form td when ratios are at most 1",
            stream: StreamKind::RatiosAtMostOne,
            lambdas: all,
            a: (l::vtrace, p),
            b: (l::offpolicy_td_rho_on_update, p),
        },
    ]
}

/// Weight trajectories of ABTD for each `ζ` on one Collision stream; the
/// result is the worst deviation from the first `ζ`.
pub fn abtd_zeta_deviation(zetas: &[f64], steps: usize, seed: u64) -> f64 {
    let task = CollisionTask::default();
    let scale = AbtdScale::from_policies(&task.behavior_policy(), &task.target_policy());
    let stream = collision_stream(steps, seed, false);
    let with = |zeta: f64| -> (StepFn, StepParams) {
        (
            l::abtd,
            StepParams {
                psi: scale.psi(zeta),
                ..params(ALPHA, 0.0)
            },
        )
    };
    zetas
        .iter()
        .skip(1)
        .map(|&z| weight_deviation(&stream, with(zetas[0]), with(z)))
        .fold(0.0, f64::max)
}

/// Hand-evaluated single steps from `w = [0.5, 0.25]`, `x = [1, 0]`,
/// `x' = [0, 1]`, `r = 1`, `γ' = 0.9`, `λ = 0.5`, `π = 1`, `b = 0.5`,
/// `α = 0.1`, `α_v = 0.05`, at an episode start. Returns one message per
/// mismatch.
pub fn scalar_oracles() -> Vec<String> {
    let x = [1.0, 0.0];
    let xn = [0.0, 1.0];
    let t = Transition::new(&x, 1.0, &xn, 0.9, 1.0, 0.5);
    let p = StepParams {
        alpha_v: 0.05,
        ..params(0.1, 0.5)
    };
    let start = || {
        let mut st = LearnerState::new(2);
        st.w = vec![0.5, 0.25];
        st
    };
    let task = CollisionTask::default();
    let psi = AbtdScale::from_policies(&task.behavior_policy(), &task.target_policy()).psi(0.5);

    type Expect = (&'static str, StepFn, StepParams, [f64; 2], Option<[f64; 2]>);
    let cases: [Expect; 10] = [
        ("td", l::offpolicy_td, p, [0.645, 0.25], None),
        ("gtd", l::gtd, p, [0.645, 0.25], Some([0.0725, 0.0])),
        ("gtd2", l::gtd2, p, [0.5, 0.25], Some([0.0725, 0.0])),
        (
            "proximal_gtd2",
            l::proximal_gtd2,
            p,
            [0.50725, 0.243475],
            Some([0.068875, 0.0]),
        ),
        ("htd", l::htd, p, [0.645, 0.25], Some([0.0725, 0.0])),
        (
            "tdrc",
            l::tdrc,
            StepParams { alpha_v: 0.1, ..p },
            [0.645, 0.25],
            Some([0.145, 0.0]),
        ),
        ("etd", l::etd, p, [0.645, 0.25], None),
        ("tree_backup", l::tree_backup, p, [0.645, 0.25], None),
        ("vtrace", l::vtrace, p, [0.645, 0.25], None),
        (
            "abtd",
            l::abtd,
            StepParams { psi, ..p },
            [0.645, 0.25],
            None,
        ),
    ];
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12);
    let mut failures = Vec::new();
    for (name, step, params, w, v) in cases {
        let mut st = start();
        let delta = step(&mut st, &params, &t);
        if (delta - 0.725).abs() > 1e-12 {
            failures.push(format!("{name}: td error {delta}"));
        }
        if !close(&st.w, &w) {
            failures.push(format!("{name}: w = {:?}, expected {w:?}", st.w));
        }
        if let Some(v) = v {
            if !close(&st.v, &v) {
                failures.push(format!("{name}: v = {:?}, expected {v:?}", st.v));
            }
        }
    }
    let (f, m) = l::emphasis_update(1.0, 2.0, 0.9, 0.5);
    if (f - 2.8).abs() > 1e-12 || (m - 1.9).abs() > 1e-12 {
        failures.push(format!("emphasis: F={f}, M={m}"));
    }
    failures
}

/// Initial weight of the divergence chain.
pub const CHAIN_W0: f64 = 1.0;

/// Two-state chain repeated as short episodes: A (feature 1) moves to B
/// (feature 2) with `r = 0`, `γ = 1` and ratio 10 (`π = 1`, `b = 0.1`), then
/// B terminates.
pub fn chain_stream(steps: usize) -> Vec<OwnedTransition> {
    let to_b = OwnedTransition {
        x: vec![1.0],
        x_next: vec![2.0],
        reward: 0.0,
        gamma_next: 1.0,
        pi: 1.0,
        b: 0.1,
    };
    let end = OwnedTransition {
        x: vec![2.0],
        x_next: vec![0.0],
        reward: 0.0,
        gamma_next: 0.0,
        pi: 1.0,
        b: 1.0,
    };
    (0..steps)
        .map(|i| {
            if i % 2 == 0 {
                to_b.clone()
            } else {
                end.clone()
            }
        })
        .collect()
}

/// Largest `|w| / |w0|` reached on the chain.
pub fn chain_growth(step: StepFn, params: StepParams, steps: usize) -> f64 {
    let mut st = LearnerState::new(1);
    st.w[0] = CHAIN_W0;
    let mut worst = 1.0_f64;
    for t in chain_stream(steps) {
        step(&mut st, &params, &t.as_transition());
        let ratio = st.w[0].abs() / CHAIN_W0;
        if !ratio.is_finite() {
            return f64::INFINITY;
        }
        worst = worst.max(ratio);
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivergenceReport {
    /// TD(0), α = 0.1, within 200 transitions.
    pub td: f64,
    /// The rest over 10^4 transitions.
    pub gtd: f64,
    pub tdrc: f64,
    pub etd: f64,
}

pub fn divergence_report() -> DivergenceReport {
    DivergenceReport {
        td: chain_growth(l::offpolicy_td, params(0.1, 0.0), 200),
        gtd: chain_growth(
            l::gtd,
            StepParams {
                alpha_v: 0.04,
                ..params(0.01, 0.0)
            },
            10_000,
        ),
        tdrc: chain_growth(l::tdrc, params(0.003, 0.0), 10_000),
        etd: chain_growth(l::etd, params(0.01, 0.0), 10_000),
    }
}

impl DivergenceReport {
    pub fn passed(&self) -> bool {
        self.td >= 10.0 && self.gtd <= 2.0 && self.tdrc <= 2.0 && self.etd <= 2.0
    }
}

fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone()
        .svd(true, true)
        .pseudo_inverse(1e-12)
        .expect("SVD computed with both factors")
}

/// GTD2(0) on the Collision task with exact expectations. For several random
/// `w`, the expected weight increment at the optimal secondary weights is
/// compared with a central-difference gradient of the projected Bellman
/// error. Returns the smallest cosine between the increment and the negative
/// gradient; positive means aligned.
pub fn gradient_alignment(seed: u64, samples: usize) -> f64 {
    let task = CollisionTask::default();
    let (b, pi) = (task.behavior_policy(), task.target_policy());
    let fm = generate_feature_map(seed, 6, 3).expect("valid feature shape");
    let mu = stationary_distribution_analytic(&task, &b);
    let d = fm.dim();

    let mut transitions: Vec<(f64, OwnedTransition)> = Vec::new();
    for s in 0..task.num_states {
        for a in Action::ALL {
            let prob = mu.weights()[s] * b.prob(s, a);
            if prob == 0.0 {
                continue;
            }
            let o = task.outcome(s, a);
            let t = Transition::new(
                fm.features(s),
                o.reward,
                fm.features_or_zero(o.next_state),
                o.discount,
                pi.prob(s, a),
                b.prob(s, a),
            );
            transitions.push((prob, OwnedTransition::from_transition(&t)));
        }
    }

    let c = transitions
        .iter()
        .fold(DMatrix::zeros(d, d), |acc, (p, t)| {
            let x = DVector::from_column_slice(&t.x);
            acc + *p * &x * x.transpose()
        });
    let c_inv = pinv(&c);
    // E[ρ δ x] under the behavior distribution.
    let expected_update = |w: &[f64]| {
        transitions.iter().fold(DVector::zeros(d), |acc, (p, t)| {
            let tr = t.as_transition();
            let delta = l::td_error(w, &tr);
            acc + DVector::from_column_slice(&t.x) * (*p * tr.rho * delta)
        })
    };
    let pbe = |w: &[f64]| {
        let g = expected_update(w);
        (g.transpose() * &c_inv * &g)[(0, 0)]
    };

    let mut rng = rng_for(seed, Purpose::Synthetic);
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v_star: Vec<f64> = (&c_inv * expected_update(&w)).iter().copied().collect();

        // Expected increment, taken through the learner's own step.
        let mut increment = DVector::zeros(d);
        for (p, t) in &transitions {
            let mut st = LearnerState::new(d);
            st.w = w.clone();
            st.v = v_star.clone();
            l::gtd2(&mut st, &params(1.0, 0.0), &t.as_transition());
            for i in 0..d {
                increment[i] += p * (st.w[i] - w[i]);
            }
        }

        let h = 1e-6;
        let neg_grad = DVector::from_fn(d, |i, _| {
            let mut up = w.clone();
            let mut down = w.clone();
            up[i] += h;
            down[i] -= h;
            -(pbe(&up) - pbe(&down)) / (2.0 * h)
        });
        let cos = increment.dot(&neg_grad) / (increment.norm() * neg_grad.norm());
        worst = worst.min(cos);
    }
    worst
}

/// Mean `VE(w*)` over `maps` random feature maps, weighted by the exact
/// behavior state distribution.
pub fn mean_reference_error(maps: usize, seed_base: u64) -> f64 {
    let task = CollisionTask::default();
    let mu = stationary_distribution_analytic(&task, &task.behavior_policy());
    let truth = true_values(&task);
    let total: f64 = (0..maps as u64)
        .map(|k| {
            let fm = generate_feature_map(seed_base + k, 6, 3).expect("valid feature shape");
            ve(&solve_wstar(&fm, &mu, &truth), &fm, &mu, &truth)
        })
        .sum();
    total / maps as f64
}

/// `RVE(0)` against the exact behavior state distribution.
pub fn initial_error() -> f64 {
    let task = CollisionTask::default();
    let mu = stationary_distribution_analytic(&task, &task.behavior_policy());
    let fm = generate_feature_map(0, 6, 3).expect("valid feature shape");
    rve(&[0.0; 6], &fm, &mu, &true_values(&task))
}

/// Max-norm gap between the sampled and exact state distributions.
pub fn state_distribution_gap(samples: usize, seed: u64) -> f64 {
    let task = CollisionTask::default();
    let b = task.behavior_policy();
    stationary_distribution_sampled(&task, &b, samples, seed)
        .max_abs_diff(&stationary_distribution_analytic(&task, &b))
}

fn tiny_sweep() -> SweepConfig {
    SweepConfig::from_json(
        r#"{"algorithms": ["td", "gtd", "etd_beta", "abtd"], "runs": 2, "steps": 200, "mu_samples": 20000,
            "grid": {"alpha": [1, 0.0625, 0.00390625], "lambda": [0, 0.9], "eta": [1, 4], "beta": [0, 0.4], "zeta": [0.5, 1]}}"#,
    )
    .expect("built-in config parses")
}

/// Summary and rerun index of a tiny sweep, once per worker count; all
/// entries must be identical.
pub fn sweep_outputs(worker_counts: &[usize]) -> crate::Result<Vec<String>> {
    let config = tiny_sweep();
    worker_counts
        .iter()
        .map(|&w| {
            let out = run_sweep(&config, w, None, None)?;
            Ok(summary_to_csv(&out.summary) + &rerun_index_to_csv(&out.reruns))
        })
        .collect()
}

fn steps_are_deterministic() -> bool {
    let stream = synthetic_stream(500, 6, 3, false);
    let task = CollisionTask::default();
    let psi = AbtdScale::from_policies(&task.behavior_policy(), &task.target_policy()).psi(0.75);
    let p = StepParams {
        beta: 0.6,
        psi,
        ..params(0.01, 0.9)
    };
    let fns: [StepFn; 11] = [
        l::offpolicy_td,
        l::gtd,
        l::gtd2,
        l::htd,
        l::proximal_gtd2,
        l::tdrc,
        l::etd,
        l::etd_beta,
        l::tree_backup,
        l::vtrace,
        l::abtd,
    ];
    fns.iter()
        .all(|&f| weight_deviation(&stream, (f, p), (f, p)) == 0.0)
}

fn clamped_curves_are_finite() -> bool {
    let spec = l::LearnerConfig::new(l::Algorithm::Td, 1.0).lambda(1.0);
    let exp = harness::Experiment::new(harness::ExperimentSettings {
        runs: 2,
        steps: 2_000,
        mu_samples: 20_000,
        ..Default::default()
    });
    match exp.and_then(|e| e.execute(&spec)) {
        Ok(results) => {
            results.iter().any(|r| r.diverged)
                && results.iter().all(|r| r.rve.iter().all(|x| x.is_finite()))
        }
        Err(_) => false,
    }
}

/// Every check, in a fixed order.
pub fn run_all() -> Vec<Check> {
    let mut checks = Vec::new();

    let failures = scalar_oracles();
    checks.push(Check::new(
        "single-step scalar oracles",
        failures.is_empty(),
        if failures.is_empty() {
            "all learners match".to_string()
        } else {
            failures.join("; ")
        },
    ));

    for r in reductions() {
        let dev = r.deviation(1_000, 11);
        checks.push(Check::new(
            r.name,
            dev < REDUCTION_TOLERANCE,
            format!("max relative deviation {dev:.3e} over 1000 steps"),
        ));
    }
    let dev = abtd_zeta_deviation(&[0.5, 0.75, 1.0], 1_000, 11);
    checks.push(Check::new(
        "abtd identical for zeta in {0.5, 0.75, 1}",
        dev == 0.0,
        format!("max deviation {dev:.3e}"),
    ));

    checks.push(Check::new(
        "steps are deterministic",
        steps_are_deterministic(),
        "every learner, two passes over one stream",
    ));

    let d = divergence_report();
    checks.push(Check::new(
        "two-state divergence counterexample",
        d.passed(),
        format!(
            "td(0) x{:.3e} in 200 steps; max |w|/|w0| over 1e4 steps: gtd {:.3}, tdrc {:.3}, etd {:.3}",
            d.td, d.gtd, d.tdrc, d.etd
        ),
    ));

    let cos = gradient_alignment(5, 8);
    checks.push(Check::new(
        "gtd2(0) expected update follows the projected Bellman error gradient",
        cos > 0.0,
        format!("min cosine {cos:.6}"),
    ));

    let gap = state_distribution_gap(1_000_000, 0);
    checks.push(Check::new(
        "sampled state distribution",
        gap < 0.005,
        format!("max-norm gap {gap:.5} at 1e6 steps"),
    ));

    let e0 = initial_error();
    checks.push(Check::new(
        "initial error",
        (e0 - 0.689).abs() <= 0.001,
        format!("RVE(0) = {e0:.6}"),
    ));

    let feature_ok = (0..50).all(|seed| {
        generate_feature_map(seed, 6, 3)
            .map(|fm| fm.rows().iter().all(|r| r.iter().sum::<f64>() == 3.0) && fm.rank() <= 6)
            .unwrap_or(false)
    });
    checks.push(Check::new(
        "feature maps",
        feature_ok,
        "50 seeds, binary rows with three ones",
    ));

    let task = CollisionTask::default();
    let mu = stationary_distribution_analytic(&task, &task.behavior_policy());
    let truth = true_values(&task);
    let wstar_ok = (0..10).all(|seed| {
        let fm = generate_feature_map(seed, 6, 3).expect("valid feature shape");
        let w = solve_wstar(&fm, &mu, &truth);
        let best = ve(&w, &fm, &mu, &truth);
        (0..6).all(|i| {
            [-1e-3, 1e-3].iter().all(|eps| {
                let mut p = w.clone();
                p[i] += eps;
                ve(&p, &fm, &mu, &truth) >= best
            })
        })
    });
    checks.push(Check::new(
        "reference solution is a minimum",
        wstar_ok,
        "10 feature maps",
    ));

    checks.push(Check::new(
        "divergent runs are clamped",
        clamped_curves_are_finite(),
        "td(1) at alpha = 1",
    ));

    let sweep = sweep_outputs(&[1, 2]);
    let same = matches!(&sweep, Ok(v) if v.windows(2).all(|p| p[0] == p[1]));
    checks.push(Check::new(
        "sweep output independent of worker count",
        same,
        match sweep {
            Ok(_) => "1 and 2 workers".to_string(),
            Err(e) => e.to_string(),
        },
    ));

    checks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Transition;
    use crate::linalg::{decay_accumulate, dot};

    #[test]
    fn oracles_and_reductions_hold() {
        assert!(scalar_oracles().is_empty(), "{:?}", scalar_oracles());
        for r in reductions() {
            assert!(r.deviation(300, 2) < REDUCTION_TOLERANCE, "{}", r.name);
        }
        assert_eq!(abtd_zeta_deviation(&[0.5, 0.75, 1.0], 300, 2), 0.0);
    }

    /// HTD with the `z_b` contribution to the correction sign-flipped.
    fn htd_flipped(st: &mut LearnerState, p: &StepParams, t: &Transition<'_>) -> f64 {
        let delta = l::td_error(&st.w, t);
        let gamma = st.prev.gamma;
        decay_accumulate(&mut st.z, t.rho * gamma * p.lambda, t.rho, t.x);
        decay_accumulate(&mut st.z_b, gamma * p.lambda, 1.0, t.x);
        let v_zb = dot(&st.v, &st.z_b);
        let v_zsum = dot(&st.v, &st.z) + v_zb;
        for i in 0..st.w.len() {
            let dx = t.x[i] - t.gamma_next * t.x_next[i];
            st.v[i] += p.alpha_v * (delta * st.z[i] - dx * v_zb);
            st.w[i] += p.alpha * (delta * st.z[i] + dx * v_zsum);
        }
        delta
    }

    #[test]
    fn broken_htd_fails_on_policy_reduction() {
        let mut r = reductions()
            .into_iter()
            .find(|r| r.name == "htd is td on-policy")
            .unwrap();
        r.a.0 = htd_flipped;
        assert!(r.deviation(1_000, 11) > REDUCTION_TOLERANCE);
    }

    #[test]
    fn broken_etd_fails_reduction() {
        fn etd_no_emphasis_reset(st: &mut LearnerState, p: &StepParams, t: &Transition<'_>) -> f64 {
            st.prev.gamma = st.prev.gamma.max(0.9);
            l::etd_beta(st, p, t)
        }
        let mut r = reductions()
            .into_iter()
            .find(|r| r.name == "etd(lambda, gamma) is etd(lambda)")
            .unwrap();
        r.a.0 = etd_no_emphasis_reset;
        assert!(r.deviation(1_000, 11) > REDUCTION_TOLERANCE);
    }

    #[test]
    fn divergence_counterexample() {
        let d = divergence_report();
        assert!(d.passed(), "{d:?}");
        // Bounded learners head back to the fixed point w = 0.
        let mut st = LearnerState::new(1);
        st.w[0] = CHAIN_W0;
        for t in chain_stream(10_000) {
            l::etd(&mut st, &params(0.01, 0.0), &t.as_transition());
        }
        assert!(st.w[0].abs() < 1e-6);
    }

    #[test]
    fn gradient_check_is_aligned() {
        let cos = gradient_alignment(1, 4);
        assert!(cos > 0.99, "cosine {cos}");
    }

    #[test]
    fn synthetic_ratio_bound() {
        assert!(synthetic_stream(1_000, 4, 1, true)
            .iter()
            .all(|t| t.pi <= t.b));
        let s = synthetic_stream(10, 4, 1, false);
        assert_eq!(s, synthetic_stream(10, 4, 1, false));
        for t in &s {
            if t.gamma_next == 0.0 {
                assert!(t.x_next.iter().all(|&x| x == 0.0));
            }
        }
    }
}
