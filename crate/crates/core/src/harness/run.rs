use rayon::prelude::*;

use crate::env::{
    generate_feature_map, stationary_distribution_sampled, true_values, BehaviorStream,
    CollisionTask, Experience, FeatureMap, Policy, ValueErrorEvaluator,
};
use crate::error::Result;
use crate::learners::{Learner, LearnerConfig};

/// Weights beyond this magnitude count as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;
/// Ceiling for RVE values recorded after a divergence.
pub const RVE_CLAMP: f64 = 10.0;

/// Data sizes shared by every run of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSettings {
    pub runs: usize,
    pub steps: usize,
    pub seed_base: u64,
    pub feature_dim: usize,
    pub feature_ones: usize,
    /// Behavior steps used to estimate the state weighting of each run.
    pub mu_samples: usize,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            runs: 50,
            steps: 20_000,
            seed_base: 0,
            feature_dim: 6,
            feature_ones: 3,
            mu_samples: 1_000_000,
        }
    }
}

/// Features, transitions and error weighting of one run. Run `k` uses seed
/// `seed_base + k` for all of them, so every instance sees the same data.
#[derive(Clone, Debug)]
pub struct RunData {
    pub index: usize,
    pub seed: u64,
    pub features: FeatureMap,
    pub stream: Vec<Experience>,
    pub evaluator: ValueErrorEvaluator,
}

impl RunData {
    pub fn prepare(
        task: &CollisionTask,
        behavior: &Policy,
        target: &Policy,
        settings: &ExperimentSettings,
        index: usize,
    ) -> Result<Self> {
        let seed = settings.seed_base + index as u64;
        let features = generate_feature_map(seed, settings.feature_dim, settings.feature_ones)?;
        let stream = BehaviorStream::new(task, behavior, target, seed)
            .take(settings.steps)
            .collect();
        let mu = stationary_distribution_sampled(task, behavior, settings.mu_samples.max(1), seed);
        let evaluator = ValueErrorEvaluator::new(&features, &mu, &true_values(task));
        Ok(RunData {
            index,
            seed,
            features,
            stream,
            evaluator,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub run_index: usize,
    /// RVE before the first update and after each step (`steps + 1` values).
    pub rve: Vec<f64>,
    pub diverged: bool,
}

/// The Collision task with prepared runs.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub task: CollisionTask,
    pub behavior: Policy,
    pub target: Policy,
    pub settings: ExperimentSettings,
    runs: Vec<RunData>,
}

impl Experiment {
    /// Prepares all runs, in parallel on the current rayon pool.
    pub fn new(settings: ExperimentSettings) -> Result<Self> {
        let task = CollisionTask::default();
        let behavior = task.behavior_policy();
        let target = task.target_policy();
        let runs = (0..settings.runs)
            .into_par_iter()
            .map(|k| RunData::prepare(&task, &behavior, &target, &settings, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Experiment {
            task,
            behavior,
            target,
            settings,
            runs,
        })
    }

    pub fn runs(&self) -> &[RunData] {
        &self.runs
    }

    pub fn execute(&self, spec: &LearnerConfig) -> Result<Vec<RunResult>> {
        self.runs
            .iter()
            .map(|run| self.execute_run(spec, run))
            .collect()
    }

    pub fn execute_run(&self, spec: &LearnerConfig, run: &RunData) -> Result<RunResult> {
        let steps = self.settings.steps.min(run.stream.len());
        let mut learner = Learner::new(spec, run.features.dim(), &self.behavior, &self.target)?;
        let mut rve = Vec::with_capacity(steps + 1);
        rve.push(run.evaluator.rve(learner.weights()));
        let mut diverged = false;
        for e in &run.stream[..steps] {
            learner.step(&e.transition(&run.features));
            let state = learner.state();
            if !state.is_finite() || state.max_abs_weight() > DIVERGENCE_THRESHOLD {
                // Weights stay frozen from here on, so the error is constant.
                let frozen = clamp_rve(run.evaluator.rve(learner.weights()));
                rve.resize(steps + 1, frozen);
                diverged = true;
                break;
            }
            rve.push(run.evaluator.rve(learner.weights()));
        }
        Ok(RunResult {
            run_index: run.index,
            rve,
            diverged,
        })
    }
}

fn clamp_rve(rve: f64) -> f64 {
    if rve.is_nan() {
        RVE_CLAMP
    } else {
        rve.min(RVE_CLAMP)
    }
}

/// Runs one instance on freshly prepared data.
pub fn execute_instance(
    spec: &LearnerConfig,
    runs: usize,
    steps: usize,
    seed_base: u64,
) -> Result<Vec<RunResult>> {
    let settings = ExperimentSettings {
        runs,
        steps,
        seed_base,
        ..ExperimentSettings::default()
    };
    Experiment::new(settings)?.execute(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::Algorithm;
    use approx::assert_relative_eq;

    fn small(runs: usize, steps: usize) -> Experiment {
        Experiment::new(ExperimentSettings {
            runs,
            steps,
            seed_base: 7,
            mu_samples: 100_000,
            ..ExperimentSettings::default()
        })
        .unwrap()
    }

    #[test]
    fn zero_steps_records_initial_error_only() {
        let exp = small(3, 0);
        let spec = LearnerConfig::new(Algorithm::Td, 0.1).lambda(0.0);
        for r in exp.execute(&spec).unwrap() {
            assert_eq!(r.rve.len(), 1);
            assert_relative_eq!(r.rve[0], 0.689, epsilon = 0.01);
        }
    }

    #[test]
    fn zero_step_size_keeps_error_constant() {
        let exp = small(2, 500);
        let spec = LearnerConfig::new(Algorithm::Gtd, 0.0).lambda(0.5).eta(1.0);
        for r in exp.execute(&spec).unwrap() {
            assert_eq!(r.rve.len(), 501);
            assert!(r.rve.iter().all(|&x| x == r.rve[0]));
            assert!(!r.diverged);
        }
    }

    #[test]
    fn huge_step_size_is_clamped() {
        let exp = small(2, 2_000);
        let spec = LearnerConfig::new(Algorithm::Td, 1.0).lambda(1.0);
        let results = exp.execute(&spec).unwrap();
        assert!(results.iter().any(|r| r.diverged));
        for r in &results {
            assert_eq!(r.rve.len(), 2_001);
            assert!(r.rve.iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn runs_share_streams_across_instances() {
        let exp = small(2, 100);
        let a = &exp.runs()[0];
        let b = RunData::prepare(&exp.task, &exp.behavior, &exp.target, &exp.settings, 0).unwrap();
        assert_eq!(a.stream, b.stream);
        assert_eq!(a.features, b.features);
        assert_ne!(exp.runs()[0].stream, exp.runs()[1].stream);
    }

    #[test]
    fn execution_is_deterministic() {
        let exp = small(2, 1_000);
        let spec = LearnerConfig::new(Algorithm::Htd, 2f64.powi(-5))
            .lambda(0.9)
            .eta(0.25);
        assert_eq!(exp.execute(&spec).unwrap(), exp.execute(&spec).unwrap());
    }
}
