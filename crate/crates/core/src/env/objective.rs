use nalgebra::{DMatrix, DVector};

use super::{FeatureMap, StateDistribution, TrueValues};
use crate::linalg::dot;

/// `Σ_s μ(s) (wᵀx(s) − v(s))²`
pub fn ve(w: &[f64], features: &FeatureMap, mu: &StateDistribution, truth: &TrueValues) -> f64 {
    assert_eq!(w.len(), features.dim(), "weight dimension mismatch");
    (0..features.num_states())
        .map(|s| {
            let err = dot(w, features.features(s)) - truth.values[s];
            mu.weights()[s] * err * err
        })
        .sum()
}

pub fn rve(w: &[f64], features: &FeatureMap, mu: &StateDistribution, truth: &TrueValues) -> f64 {
    ve(w, features, mu, truth).sqrt()
}

/// Minimizer of [`ve`]. The weighted normal equations are solved through the
/// pseudo-inverse of `D^½ X`, which yields the minimum-norm minimizer when
/// the features are rank deficient.
pub fn solve_wstar(features: &FeatureMap, mu: &StateDistribution, truth: &TrueValues) -> Vec<f64> {
    let n = features.num_states();
    let d = features.dim();
    let sqrt_mu: Vec<f64> = mu.weights().iter().map(|m| m.sqrt()).collect();
    let a = DMatrix::from_fn(n, d, |i, j| sqrt_mu[i] * features.features(i)[j]);
    let y = DVector::from_fn(n, |i, _| sqrt_mu[i] * truth.values[i]);
    let pinv = a
        .svd(true, true)
        .pseudo_inverse(1e-12)
        .expect("SVD computed with both factors");
    (pinv * y).iter().copied().collect()
}

/// Precomputed RVE evaluation for the per-step learning curves.
#[derive(Clone, Debug)]
pub struct ValueErrorEvaluator {
    rows: Vec<f64>,
    dim: usize,
    weights: Vec<f64>,
    targets: Vec<f64>,
}

impl ValueErrorEvaluator {
    pub fn new(features: &FeatureMap, mu: &StateDistribution, truth: &TrueValues) -> Self {
        ValueErrorEvaluator {
            rows: features.rows().iter().flatten().copied().collect(),
            dim: features.dim(),
            weights: mu.weights().to_vec(),
            targets: truth.values.clone(),
        }
    }

    pub fn ve(&self, w: &[f64]) -> f64 {
        self.rows
            .chunks_exact(self.dim)
            .zip(self.weights.iter().zip(&self.targets))
            .map(|(x, (m, v))| {
                let err = dot(w, x) - v;
                m * err * err
            })
            .sum()
    }

    pub fn rve(&self, w: &[f64]) -> f64 {
        self.ve(w).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{
        generate_feature_map, stationary_distribution_analytic, true_values, CollisionTask,
    };
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn analytic_setup() -> (StateDistribution, TrueValues) {
        let task = CollisionTask::default();
        (
            stationary_distribution_analytic(&task, &task.behavior_policy()),
            true_values(&task),
        )
    }

    #[test]
    fn zero_weights_error() {
        let (mu, truth) = analytic_setup();
        // Oracle: direct sum Σ μ(s) v(s)² with μ = [2,4,6,8,8,4,2,1]/35.
        let counts = [2.0, 4.0, 6.0, 8.0, 8.0, 4.0, 2.0, 1.0];
        let oracle: f64 = (0..8)
            .map(|s| counts[s] / 35.0 * 0.9_f64.powi(2 * (7 - s as i32)))
            .sum();
        let fm = generate_feature_map(0, 6, 3).unwrap();
        let w = vec![0.0; 6];
        assert_relative_eq!(ve(&w, &fm, &mu, &truth), oracle, epsilon = 1e-15);
        assert_relative_eq!(ve(&w, &fm, &mu, &truth), 0.474828294732092, epsilon = 1e-12);
        assert_relative_eq!(
            rve(&w, &fm, &mu, &truth),
            0.6890778582512226,
            epsilon = 1e-12
        );
    }

    #[test]
    fn tabular_solution_is_exact() {
        let (mu, truth) = analytic_setup();
        let fm = FeatureMap::tabular(8);
        let w = solve_wstar(&fm, &mu, &truth);
        assert!(ve(&w, &fm, &mu, &truth) < 1e-28);
    }

    #[test]
    fn evaluator_agrees_with_direct_sum() {
        let (mu, truth) = analytic_setup();
        let fm = generate_feature_map(4, 6, 3).unwrap();
        let eval = ValueErrorEvaluator::new(&fm, &mu, &truth);
        let w = [0.1, -0.3, 0.2, 0.5, 0.0, 0.7];
        assert_relative_eq!(eval.ve(&w), ve(&w, &fm, &mu, &truth), epsilon = 1e-15);
    }

    #[test]
    fn rank_deficient_features_give_min_norm_solution() {
        let (mu, truth) = analytic_setup();
        // Columns 4 and 5 are identical, so the minimizer is a line; the
        // minimum-norm point splits the weight evenly between them.
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|s| {
                let mut r = vec![0.0; 6];
                r[s % 4] = 1.0;
                if s >= 4 {
                    r[4] = 1.0;
                    r[5] = 1.0;
                }
                r
            })
            .collect();
        let fm = FeatureMap::from_rows(rows).unwrap();
        let w = solve_wstar(&fm, &mu, &truth);
        assert_relative_eq!(w[4], w[5], epsilon = 1e-12);
        assert!(w.iter().all(|x| x.is_finite()));
    }

    proptest! {
        #[test]
        fn wstar_is_a_minimum(seed in 0u64..500, u in prop::collection::vec(-1.0f64..1.0, 6), eps in 1e-4f64..0.5) {
            let (mu, truth) = analytic_setup();
            let fm = generate_feature_map(seed, 6, 3).unwrap();
            let w = solve_wstar(&fm, &mu, &truth);
            let perturbed: Vec<f64> = w.iter().zip(&u).map(|(a, b)| a + eps * b).collect();
            prop_assert!(ve(&w, &fm, &mu, &truth) <= ve(&perturbed, &fm, &mu, &truth) + 1e-14);
        }

        #[test]
        fn ve_is_convex(seed in 0u64..500,
                        w1 in prop::collection::vec(-2.0f64..2.0, 6),
                        w2 in prop::collection::vec(-2.0f64..2.0, 6),
                        a in 0.0f64..=1.0) {
            let (mu, truth) = analytic_setup();
            let fm = generate_feature_map(seed, 6, 3).unwrap();
            let mix: Vec<f64> = w1.iter().zip(&w2).map(|(x, y)| a * x + (1.0 - a) * y).collect();
            let lhs = ve(&mix, &fm, &mu, &truth);
            let rhs = a * ve(&w1, &fm, &mu, &truth) + (1.0 - a) * ve(&w2, &fm, &mu, &truth);
            prop_assert!(lhs <= rhs + 1e-12);
        }
    }
}
