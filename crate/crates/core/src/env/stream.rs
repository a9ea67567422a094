use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Action, CollisionTask, FeatureMap, Policy, StateDistribution};
use crate::seeding::{rng_for, Purpose};

/// One behavior step, stored without features so that a stream can be
/// replayed under any feature map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Experience {
    pub state: usize,
    pub action: Action,
    /// `None` on termination.
    pub next_state: Option<usize>,
    pub reward: f64,
    pub gamma_next: f64,
    /// Target probability of `action` in `state`.
    pub pi: f64,
    /// Behavior probability of `action` in `state`.
    pub b: f64,
    pub rho: f64,
}

impl Experience {
    pub fn transition<'a>(&self, features: &'a FeatureMap) -> Transition<'a> {
        Transition {
            x: features.features(self.state),
            x_next: features.features_or_zero(self.next_state),
            reward: self.reward,
            gamma_next: self.gamma_next,
            pi: self.pi,
            b: self.b,
            rho: self.rho,
        }
    }
}

/// What a learner sees at time t. The discount into the current state
/// (`γ_t`) is not part of the transition; learners cache the previous
/// transition's `gamma_next`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition<'a> {
    pub x: &'a [f64],
    pub x_next: &'a [f64],
    pub reward: f64,
    pub gamma_next: f64,
    pub pi: f64,
    pub b: f64,
    pub rho: f64,
}

impl<'a> Transition<'a> {
    /// Builds a transition with `ρ = π / b`.
    pub fn new(
        x: &'a [f64],
        reward: f64,
        x_next: &'a [f64],
        gamma_next: f64,
        pi: f64,
        b: f64,
    ) -> Self {
        debug_assert!(b > 0.0, "behavior probability must be positive");
        Transition {
            x,
            x_next,
            reward,
            gamma_next,
            pi,
            b,
            rho: pi / b,
        }
    }
}

/// Endless behavior-policy stream over back-to-back episodes.
pub struct BehaviorStream<'a> {
    task: &'a CollisionTask,
    behavior: &'a Policy,
    target: &'a Policy,
    rng: ChaCha8Rng,
    state: usize,
}

impl<'a> BehaviorStream<'a> {
    pub fn new(
        task: &'a CollisionTask,
        behavior: &'a Policy,
        target: &'a Policy,
        seed: u64,
    ) -> Self {
        Self::with_rng(task, behavior, target, rng_for(seed, Purpose::Trajectory))
    }

    fn with_rng(
        task: &'a CollisionTask,
        behavior: &'a Policy,
        target: &'a Policy,
        mut rng: ChaCha8Rng,
    ) -> Self {
        let state = rng.random_range(0..task.num_start_states);
        BehaviorStream {
            task,
            behavior,
            target,
            rng,
            state,
        }
    }

    pub fn current_state(&self) -> usize {
        self.state
    }
}

impl Iterator for BehaviorStream<'_> {
    type Item = Experience;

    fn next(&mut self) -> Option<Experience> {
        let s = self.state;
        let u: f64 = self.rng.random();
        let action = if u < self.behavior.prob(s, Action::Forward) {
            Action::Forward
        } else {
            Action::Turnaway
        };
        let outcome = self.task.outcome(s, action);
        let pi = self.target.prob(s, action);
        let b = self.behavior.prob(s, action);
        self.state = match outcome.next_state {
            Some(next) => next,
            None => self.rng.random_range(0..self.task.num_start_states),
        };
        Some(Experience {
            state: s,
            action,
            next_state: outcome.next_state,
            reward: outcome.reward,
            gamma_next: outcome.discount,
            pi,
            b,
            rho: pi / b,
        })
    }
}

/// First `steps` transitions of the behavior stream for `seed`.
pub fn sample_stream(
    task: &CollisionTask,
    behavior: &Policy,
    target: &Policy,
    steps: usize,
    seed: u64,
) -> Vec<Experience> {
    BehaviorStream::new(task, behavior, target, seed)
        .take(steps)
        .collect()
}

/// Fraction of the first `n` behavior steps spent in each state.
pub fn stationary_distribution_sampled(
    task: &CollisionTask,
    behavior: &Policy,
    n: usize,
    seed: u64,
) -> StateDistribution {
    assert!(n >= 1, "need at least one sample");
    let rng = rng_for(seed, Purpose::StateDistribution);
    let mut counts = vec![0_u64; task.num_states];
    for e in BehaviorStream::with_rng(task, behavior, behavior, rng).take(n) {
        counts[e.state] += 1;
    }
    StateDistribution::from_counts(&counts)
}

/// Expected visits per episode, normalized by expected episode length.
pub fn stationary_distribution_analytic(
    task: &CollisionTask,
    behavior: &Policy,
) -> StateDistribution {
    let mut visits = vec![0.0; task.num_states];
    let mut carried = 0.0;
    for s in 0..task.num_states {
        visits[s] = task.start_probability(s) + carried;
        carried = match task.outcome(s, Action::Forward).next_state {
            Some(_) => visits[s] * behavior.prob(s, Action::Forward),
            None => 0.0,
        };
    }
    let length: f64 = visits.iter().sum();
    StateDistribution {
        weights: visits.iter().map(|v| v / length).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn setup() -> (CollisionTask, Policy, Policy) {
        let task = CollisionTask::default();
        let b = task.behavior_policy();
        let pi = task.target_policy();
        (task, b, pi)
    }

    #[test]
    fn analytic_distribution_matches_hand_count() {
        let (task, b, _) = setup();
        let mu = stationary_distribution_analytic(&task, &b);
        let expected = [2.0, 4.0, 6.0, 8.0, 8.0, 4.0, 2.0, 1.0].map(|x| x / 35.0);
        for (got, want) in mu.weights().iter().zip(expected) {
            assert_relative_eq!(*got, want, epsilon = 1e-15);
        }
        assert_relative_eq!(mu.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn single_sample_is_one_hot() {
        let (task, b, _) = setup();
        let mu = stationary_distribution_sampled(&task, &b, 1, 11);
        assert_eq!(mu.weights().iter().filter(|&&w| w == 1.0).count(), 1);
        assert_eq!(mu.weights().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn sampled_distribution_converges() {
        let (task, b, _) = setup();
        let sampled = stationary_distribution_sampled(&task, &b, 1_000_000, 5);
        let analytic = stationary_distribution_analytic(&task, &b);
        assert!(sampled.max_abs_diff(&analytic) < 0.005);
        assert_eq!(
            sampled,
            stationary_distribution_sampled(&task, &b, 1_000_000, 5)
        );
    }

    #[test]
    fn stream_structure() {
        let (task, b, pi) = setup();
        let stream = sample_stream(&task, &b, &pi, 50_000, 3);
        assert_eq!(stream.len(), 50_000);
        for pair in stream.windows(2) {
            let (e, next) = (pair[0], pair[1]);
            match e.next_state {
                Some(s) => {
                    assert_eq!(next.state, s);
                    assert_eq!(e.gamma_next, 0.9);
                }
                None => {
                    assert_eq!(e.gamma_next, 0.0);
                    assert!(next.state < 4);
                }
            }
            // reward 1 exactly on a collision
            let collision = e.state == 7 && e.action == Action::Forward;
            assert_eq!(e.reward == 1.0, collision);
            if collision {
                assert_eq!(e.gamma_next, 0.0);
            }
            assert_eq!(e.rho, e.pi / e.b);
        }
    }

    #[test]
    fn deterministic_segments() {
        let (task, b, pi) = setup();
        let stream = sample_stream(&task, &b, &pi, 10_000, 9);
        let first_forced = stream.iter().find(|e| e.state == 0).unwrap();
        assert_eq!(first_forced.next_state, Some(1));
        assert_eq!(
            (
                first_forced.reward,
                first_forced.gamma_next,
                first_forced.rho
            ),
            (0.0, 0.9, 1.0)
        );
        let turn = stream
            .iter()
            .find(|e| e.state == 4 && e.action == Action::Turnaway)
            .unwrap();
        assert_eq!((turn.reward, turn.gamma_next, turn.rho), (0.0, 0.0, 0.0));
        let crash = stream
            .iter()
            .find(|e| e.state == 7 && e.action == Action::Forward)
            .unwrap();
        assert_eq!(
            (crash.reward, crash.gamma_next, crash.next_state),
            (1.0, 0.0, None)
        );
    }

    #[test]
    fn terminal_transition_has_zero_features() {
        let (task, b, pi) = setup();
        let fm = super::super::generate_feature_map(1, 6, 3).unwrap();
        for e in sample_stream(&task, &b, &pi, 1_000, 1) {
            let t = e.transition(&fm);
            assert_eq!(t.gamma_next == 0.0, t.x_next.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn mean_episode_length() {
        let (task, b, pi) = setup();
        let mut episodes = 0_u64;
        let mut steps = 0_u64;
        for e in BehaviorStream::new(&task, &b, &pi, 21) {
            steps += 1;
            if e.next_state.is_none() {
                episodes += 1;
                if episodes == 200_000 {
                    break;
                }
            }
        }
        let mean = steps as f64 / episodes as f64;
        assert!(
            (mean / (35.0 / 8.0) - 1.0).abs() < 0.01,
            "mean length {mean}"
        );
    }
}
