use offpolicy::config::SweepConfig;
use offpolicy::env::{
    generate_feature_map, rve, sample_stream, stationary_distribution_analytic, true_values,
    CollisionTask,
};
use offpolicy::harness::io::{parse_curve, read_summary};
use offpolicy::harness::{run_sweep, CONFIG_FILE, RERUN_DIR, RERUN_INDEX, SUMMARY_FILE};
use offpolicy::learners::{Algorithm, Learner, LearnerConfig};
use offpolicy::report::{generate, ReportKind, ReportOptions, WATERFALL_CEILING};

fn small_config() -> SweepConfig {
    SweepConfig::from_json(
        r#"{"algorithms": ["td", "tdrc", "etd_beta", "vtrace"], "runs": 3, "steps": 500, "mu_samples": 50000,
            "raw_curves": true,
            "grid": {"alpha": [1, 0.125, 0.015625], "lambda": [0, 1], "beta": [0.2, 0.8]}}"#,
    )
    .unwrap()
}

#[test]
fn sweep_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config();
    config.validate(false).unwrap();
    let out = run_sweep(&config, 2, Some(dir.path()), None).unwrap();

    let summary = read_summary(&dir.path().join(SUMMARY_FILE)).unwrap();
    assert_eq!(summary, out.summary);
    assert_eq!(summary.len(), config.instance_count());

    let recorded = SweepConfig::load(&dir.path().join(CONFIG_FILE)).unwrap();
    assert_eq!(recorded.rerun_seed_base(), 3);
    assert_eq!(recorded.grid(), config.grid());

    let raw = std::fs::read_dir(dir.path().join("raw")).unwrap().count();
    assert_eq!(raw, summary.len());

    let index = std::fs::read_to_string(dir.path().join(RERUN_DIR).join(RERUN_INDEX)).unwrap();
    assert_eq!(index.lines().count(), 1 + 4 * 2);
    for r in &out.reruns {
        let path = dir.path().join(RERUN_DIR).join(&r.curve);
        let curve = parse_curve(&path, &std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(curve.len(), 501);
        assert_eq!(curve[0].1, r.fresh.initial);
    }
}

#[test]
fn large_step_sizes_are_flagged_unstable() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_sweep(&small_config(), 1, Some(dir.path()), None).unwrap();
    let td_big = out
        .summary
        .iter()
        .find(|r| {
            r.spec.algorithm == Algorithm::Td && r.spec.alpha == 1.0 && r.spec.lambda == Some(1.0)
        })
        .unwrap();
    assert!(td_big.unstable);
    assert!(td_big.auc_mean.is_finite());

    let waterfall = generate(ReportKind::Waterfall, dir.path(), &ReportOptions::default()).unwrap();
    let shown = waterfall
        .lines()
        .filter(|l| l.starts_with("td,1.0"))
        .filter(|l| l.ends_with(&format!("{WATERFALL_CEILING:.16e}")))
        .count();
    assert!(shown >= 1, "{waterfall}");
}

#[test]
fn learner_improves_on_initial_error() {
    let task = CollisionTask::default();
    let (b, pi) = (task.behavior_policy(), task.target_policy());
    let fm = generate_feature_map(7, 6, 3).unwrap();
    let mu = stationary_distribution_analytic(&task, &b);
    let truth = true_values(&task);
    for alg in [Algorithm::Td, Algorithm::Etd, Algorithm::Gtd] {
        let mut config = LearnerConfig::new(alg, 2f64.powi(-7)).lambda(0.9);
        if alg.sweeps_eta() {
            config = config.eta(1.0);
        }
        let mut learner = Learner::new(&config, 6, &b, &pi).unwrap();
        let before = rve(learner.weights(), &fm, &mu, &truth);
        for e in sample_stream(&task, &b, &pi, 20_000, 7) {
            learner.step(&e.transition(&fm));
        }
        let after = rve(learner.weights(), &fm, &mu, &truth);
        assert!(after < 0.5 * before, "{alg}: {before} -> {after}");
    }
}
