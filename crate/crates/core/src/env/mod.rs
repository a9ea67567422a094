//! The Collision task.
//!
//! A vehicle moves along an eight-state track towards a wall. Episodes start
//! uniformly in one of the first four states, where `Forward` is the only
//! action. In the last four states the vehicle may also `Turnaway`, which
//! ends the episode with reward 0. Moving forward out of the last state is a
//! collision: reward 1 and the episode ends. All other rewards are 0.
//!
//! States are indexed from 0 in code (`0..8`); state 8 of the track is index 7.
//!
//! Episode ends are encoded in the discount of the transition (`γ = 0`) with
//! an all-zero next feature vector, so consecutive episodes form one
//! uninterrupted stream.

mod features;
mod objective;
mod stream;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use features::{generate_feature_map, FeatureMap};
pub use objective::{rve, solve_wstar, ve, ValueErrorEvaluator};
pub use stream::{
    sample_stream, stationary_distribution_analytic, stationary_distribution_sampled,
    BehaviorStream, Experience, Transition,
};

const PROB_TOLERANCE: f64 = 1e-12;
const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Forward,
    Turnaway,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::Forward, Action::Turnaway];

    fn index(self) -> usize {
        match self {
            Action::Forward => 0,
            Action::Turnaway => 1,
        }
    }
}

/// Result of taking an action in a state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Outcome {
    /// `None` when the episode terminates.
    pub next_state: Option<usize>,
    pub reward: f64,
    /// Discount applied to the next state's value (0 on termination).
    pub discount: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionTask {
    pub num_states: usize,
    pub discount: f64,
    /// Episodes start uniformly in states `0..num_start_states`.
    pub num_start_states: usize,
    /// `Turnaway` is available in states `turnaway_from..num_states`.
    pub turnaway_from: usize,
}

impl Default for CollisionTask {
    fn default() -> Self {
        CollisionTask {
            num_states: 8,
            discount: 0.9,
            num_start_states: 4,
            turnaway_from: 4,
        }
    }
}

impl CollisionTask {
    pub fn is_available(&self, state: usize, action: Action) -> bool {
        match action {
            Action::Forward => state < self.num_states,
            Action::Turnaway => state >= self.turnaway_from && state < self.num_states,
        }
    }

    pub fn outcome(&self, state: usize, action: Action) -> Outcome {
        debug_assert!(self.is_available(state, action));
        let last = self.num_states - 1;
        match action {
            Action::Forward if state < last => Outcome {
                next_state: Some(state + 1),
                reward: 0.0,
                discount: self.discount,
            },
            Action::Forward => Outcome {
                next_state: None,
                reward: 1.0,
                discount: 0.0,
            },
            Action::Turnaway => Outcome {
                next_state: None,
                reward: 0.0,
                discount: 0.0,
            },
        }
    }

    pub fn start_probability(&self, state: usize) -> f64 {
        if state < self.num_start_states {
            1.0 / self.num_start_states as f64
        } else {
            0.0
        }
    }

    /// Equiprobable over available actions in the last four states, forced
    /// forward elsewhere.
    pub fn behavior_policy(&self) -> Policy {
        let probs = (0..self.num_states)
            .map(|s| {
                if s >= self.turnaway_from {
                    [0.5, 0.5]
                } else {
                    [1.0, 0.0]
                }
            })
            .collect();
        Policy { probs }
    }

    /// Always forward.
    pub fn target_policy(&self) -> Policy {
        Policy {
            probs: vec![[1.0, 0.0]; self.num_states],
        }
    }
}

/// Per-state action probabilities, indexed `[forward, turnaway]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    probs: Vec<[f64; 2]>,
}

impl Policy {
    pub fn new(task: &CollisionTask, probs: Vec<[f64; 2]>) -> Result<Self> {
        if probs.len() != task.num_states {
            return Err(Error::config(format!(
                "policy covers {} states, task has {}",
                probs.len(),
                task.num_states
            )));
        }
        for (s, p) in probs.iter().enumerate() {
            if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(Error::config(format!(
                    "state {s}: probability out of [0, 1]"
                )));
            }
            if ((p[0] + p[1]) - 1.0).abs() > PROB_TOLERANCE {
                return Err(Error::config(format!(
                    "state {s}: probabilities do not sum to 1"
                )));
            }
            if !task.is_available(s, Action::Turnaway) && p[1] != 0.0 {
                return Err(Error::config(format!(
                    "state {s}: turnaway is not available"
                )));
            }
        }
        Ok(Policy { probs })
    }

    pub fn prob(&self, state: usize, action: Action) -> f64 {
        self.probs[state][action.index()]
    }

    pub fn num_states(&self) -> usize {
        self.probs.len()
    }
}

/// `v_π` per state.
#[derive(Clone, Debug, PartialEq)]
pub struct TrueValues {
    pub values: Vec<f64>,
}

impl TrueValues {
    /// Under the always-forward target policy the only reward is the
    /// collision, `8 - s` steps away, so `v(s) = γ^(8-s)`.
    pub fn for_task(task: &CollisionTask) -> Self {
        let last = task.num_states - 1;
        let values = (0..task.num_states)
            .map(|s| task.discount.powi((last - s) as i32))
            .collect();
        TrueValues { values }
    }
}

pub fn true_values(task: &CollisionTask) -> TrueValues {
    TrueValues::for_task(task)
}

/// State weighting `μ_b(s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateDistribution {
    weights: Vec<f64>,
}

impl StateDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::config(
                "state distribution has a negative or NaN weight",
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(Error::config(format!(
                "state distribution sums to {total}, expected 1"
            )));
        }
        Ok(StateDistribution { weights })
    }

    pub(crate) fn from_counts(counts: &[u64]) -> Self {
        let total: u64 = counts.iter().sum();
        let weights = counts.iter().map(|&c| c as f64 / total as f64).collect();
        StateDistribution { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn max_abs_diff(&self, other: &StateDistribution) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `state,weight` with 1-based states and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("state,weight\n");
        for (s, w) in self.weights.iter().enumerate() {
            out.push_str(&format!("{},{}\n", s + 1, crate::harness::fmt_f64(*w)));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut weights = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record =
                record.map_err(|e| Error::config(format!("state distribution csv: {e}")))?;
            let state: usize = parse_field(&record, 0)?;
            if state != i + 1 {
                return Err(Error::config("state distribution csv: states out of order"));
            }
            weights.push(parse_field(&record, 1)?);
        }
        StateDistribution::new(weights)
    }
}

pub(crate) fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize) -> Result<T> {
    record
        .get(i)
        .and_then(|f| f.trim().parse().ok())
        .ok_or_else(|| Error::config(format!("bad or missing field {i} in `{record:?}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn true_values_match_discounted_collision() {
        let v = true_values(&CollisionTask::default());
        assert_eq!(v.values[7], 1.0);
        assert_relative_eq!(v.values[0], 0.4782969, epsilon = 1e-12);
        assert_relative_eq!(v.values[4], 0.729, epsilon = 1e-12);
    }

    #[test]
    fn collision_policies_are_valid() {
        let task = CollisionTask::default();
        let b = task.behavior_policy();
        let pi = task.target_policy();
        assert!(Policy::new(&task, b.probs.clone()).is_ok());
        assert!(Policy::new(&task, pi.probs.clone()).is_ok());
        for s in 0..4 {
            assert_eq!(b.prob(s, Action::Forward), 1.0);
        }
        for s in 4..8 {
            assert_eq!(b.prob(s, Action::Forward), 0.5);
            assert_eq!(b.prob(s, Action::Turnaway), 0.5);
            assert_eq!(pi.prob(s, Action::Forward), 1.0);
        }
    }

    #[test]
    fn policy_rejects_unavailable_turnaway() {
        let task = CollisionTask::default();
        let mut probs = vec![[1.0, 0.0]; 8];
        probs[2] = [0.5, 0.5];
        assert!(Policy::new(&task, probs).is_err());
    }

    #[test]
    fn outcomes() {
        let task = CollisionTask::default();
        assert_eq!(
            task.outcome(0, Action::Forward),
            Outcome {
                next_state: Some(1),
                reward: 0.0,
                discount: 0.9
            }
        );
        assert_eq!(
            task.outcome(7, Action::Forward),
            Outcome {
                next_state: None,
                reward: 1.0,
                discount: 0.0
            }
        );
        assert_eq!(
            task.outcome(4, Action::Turnaway),
            Outcome {
                next_state: None,
                reward: 0.0,
                discount: 0.0
            }
        );
    }

    #[test]
    fn state_distribution_csv_round_trip() {
        let mu = stationary_distribution_analytic(
            &CollisionTask::default(),
            &CollisionTask::default().behavior_policy(),
        );
        let back = StateDistribution::from_csv(&mu.to_csv()).unwrap();
        assert_eq!(mu, back);
    }

    #[test]
    fn state_distribution_rejects_bad_sum() {
        assert!(StateDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(StateDistribution::new(vec![1.5, -0.5]).is_err());
    }
}
