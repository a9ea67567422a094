use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{Algorithm, LearnerConfig};

/// One algorithm with one fixed parameter setting.
pub type InstanceSpec = LearnerConfig;

/// `2^-x` for `x = 0..=18`.
pub fn alpha_values() -> Vec<f64> {
    (0..=18).map(|x| 2f64.powi(-x)).collect()
}

/// `{0, .1, .2, .3, .5, .9, 1}` together with `1 − 2^-x` for `x = 2..=6`,
/// in increasing order.
pub fn lambda_values() -> Vec<f64> {
    let mut v = vec![0.0, 0.1, 0.2, 0.3, 0.5, 0.9, 1.0];
    v.extend((2..=6).map(|x| 1.0 - 2f64.powi(-x)));
    v.sort_by(f64::total_cmp);
    v
}

/// `2^x` for `x = -6..=8`.
pub fn eta_values() -> Vec<f64> {
    (-6..=8).map(|x| 2f64.powi(x)).collect()
}

pub fn beta_values() -> Vec<f64> {
    vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
}

/// ABTD's `ζ` shares the `λ` values.
pub fn zeta_values() -> Vec<f64> {
    lambda_values()
}

/// Alternative 19-point `ζ` set, evenly spaced on `[0, 1]`.
pub fn zeta_values_fine() -> Vec<f64> {
    (0..=18).map(|k| k as f64 / 18.0).collect()
}

/// Parameter values swept for every algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterGrid {
    pub alpha: Vec<f64>,
    pub lambda: Vec<f64>,
    pub eta: Vec<f64>,
    pub beta: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl Default for ParameterGrid {
    fn default() -> Self {
        ParameterGrid {
            alpha: alpha_values(),
            lambda: lambda_values(),
            eta: eta_values(),
            beta: beta_values(),
            zeta: zeta_values(),
        }
    }
}

impl ParameterGrid {
    /// Cross product for one algorithm. Order: `λ` (or `ζ`), then `η` or
    /// `β`, then `α`.
    pub fn expand(&self, algorithm: Algorithm) -> Vec<InstanceSpec> {
        let outer: Vec<LearnerConfig> = if algorithm == Algorithm::Abtd {
            self.zeta
                .iter()
                .map(|&z| LearnerConfig::new(algorithm, 0.0).zeta(z))
                .collect()
        } else {
            self.lambda
                .iter()
                .map(|&l| LearnerConfig::new(algorithm, 0.0).lambda(l))
                .collect()
        };
        let middle: Vec<LearnerConfig> = outer
            .into_iter()
            .flat_map(|base| -> Vec<LearnerConfig> {
                if algorithm.sweeps_eta() {
                    self.eta.iter().map(|&e| base.clone().eta(e)).collect()
                } else if algorithm == Algorithm::EtdBeta {
                    self.beta.iter().map(|&b| base.clone().beta(b)).collect()
                } else {
                    vec![base]
                }
            })
            .collect();
        middle
            .into_iter()
            .flat_map(|base| {
                self.alpha.iter().map(move |&a| LearnerConfig {
                    alpha: a,
                    ..base.clone()
                })
            })
            .collect()
    }

    pub fn size(&self, algorithm: Algorithm) -> usize {
        let outer = if algorithm == Algorithm::Abtd {
            self.zeta.len()
        } else {
            self.lambda.len()
        };
        let middle = if algorithm.sweeps_eta() {
            self.eta.len()
        } else if algorithm == Algorithm::EtdBeta {
            self.beta.len()
        } else {
            1
        };
        outer * middle * self.alpha.len()
    }
}

/// Full default grid for an algorithm id.
pub fn expand_grid(algorithm: &str) -> Result<Vec<InstanceSpec>> {
    let algorithm: Algorithm = algorithm.parse()?;
    Ok(ParameterGrid::default().expand(algorithm))
}

/// Fails unless every value of `values` appears in `allowed`.
pub(crate) fn check_subset(name: &str, values: &[f64], allowed: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::config(format!("grid override `{name}` is empty")));
    }
    match values.iter().find(|v| !allowed.contains(v)) {
        Some(v) => Err(Error::config(format!(
            "grid override `{name}` contains {v}, which is not a standard grid value \
             (pass --allow-custom-grid to permit it)"
        ))),
        None => Ok(()),
    }
}
