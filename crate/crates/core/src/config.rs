//! Sweep configuration, read from JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{grid, Criterion, ExperimentSettings, ParameterGrid};
use crate::learners::Algorithm;

/// Subsets of the standard parameter values. Missing lists mean the full set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<Vec<f64>>,
}

impl GridOverrides {
    pub fn resolve(&self) -> ParameterGrid {
        let d = ParameterGrid::default();
        ParameterGrid {
            alpha: self.alpha.clone().unwrap_or(d.alpha),
            lambda: self.lambda.clone().unwrap_or(d.lambda),
            eta: self.eta.clone().unwrap_or(d.eta),
            beta: self.beta.clone().unwrap_or(d.beta),
            zeta: self.zeta.clone().unwrap_or(d.zeta),
        }
    }

    fn validate(&self, allow_custom: bool) -> Result<()> {
        let d = ParameterGrid::default();
        let lists = [
            ("alpha", &self.alpha, &d.alpha),
            ("lambda", &self.lambda, &d.lambda),
            ("eta", &self.eta, &d.eta),
            ("beta", &self.beta, &d.beta),
            ("zeta", &self.zeta, &d.zeta),
        ];
        for (name, values, standard) in lists {
            let Some(values) = values else { continue };
            if allow_custom {
                if values.is_empty() {
                    return Err(Error::config(format!("grid override `{name}` is empty")));
                }
                if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
                    return Err(Error::config(format!(
                        "grid override `{name}` contains {v}"
                    )));
                }
            } else {
                grid::check_subset(name, values, standard)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Only `collision` is supported.
    pub task: String,
    pub algorithms: Vec<Algorithm>,
    pub steps: usize,
    pub runs: usize,
    pub seed_base: u64,
    pub grid: GridOverrides,
    pub feature_dim: usize,
    pub feature_ones: usize,
    pub mu_samples: usize,
    /// Rerun the best instance of every (algorithm, λ) pair on fresh seeds.
    pub rerun: bool,
    /// Defaults to `runs`.
    pub rerun_runs: Option<usize>,
    /// Defaults to `seed_base + runs`.
    pub rerun_seed_base: Option<u64>,
    pub rerun_criterion: Criterion,
    /// Write every run's curve of every instance. Large.
    pub raw_curves: bool,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let settings = ExperimentSettings::default();
        SweepConfig {
            task: "collision".to_string(),
            algorithms: Algorithm::ALL.to_vec(),
            steps: settings.steps,
            runs: settings.runs,
            seed_base: settings.seed_base,
            grid: GridOverrides::default(),
            feature_dim: settings.feature_dim,
            feature_ones: settings.feature_ones,
            mu_samples: settings.mu_samples,
            rerun: true,
            rerun_runs: None,
            rerun_seed_base: None,
            rerun_criterion: Criterion::Auc,
            raw_curves: false,
            out: None,
            workers: None,
        }
    }
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("invalid sweep config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self, allow_custom_grid: bool) -> Result<()> {
        if self.task != "collision" {
            return Err(Error::config(format!("unsupported task `{}`", self.task)));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("algorithm list is empty"));
        }
        let mut seen = self.algorithms.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.algorithms.len() {
            return Err(Error::config("algorithm list has duplicates"));
        }
        if self.steps == 0 || self.runs == 0 {
            return Err(Error::config("steps and runs must be at least 1"));
        }
        if self.rerun_runs == Some(0) || self.workers == Some(0) || self.mu_samples == 0 {
            return Err(Error::config(
                "rerun_runs, workers and mu_samples must be at least 1",
            ));
        }
        if self.feature_ones == 0 || self.feature_ones >= self.feature_dim {
            return Err(Error::config("need 0 < feature_ones < feature_dim"));
        }
        self.grid.validate(allow_custom_grid)
    }

    /// Copy with every default spelled out.
    pub fn resolved(&self) -> SweepConfig {
        let g = self.grid.resolve();
        SweepConfig {
            grid: GridOverrides {
                alpha: Some(g.alpha),
                lambda: Some(g.lambda),
                eta: Some(g.eta),
                beta: Some(g.beta),
                zeta: Some(g.zeta),
            },
            rerun_runs: Some(self.rerun_runs()),
            rerun_seed_base: Some(self.rerun_seed_base()),
            workers: Some(self.workers.unwrap_or(1)),
            ..self.clone()
        }
    }

    pub fn rerun_runs(&self) -> usize {
        self.rerun_runs.unwrap_or(self.runs)
    }

    pub fn rerun_seed_base(&self) -> u64 {
        self.rerun_seed_base
            .unwrap_or(self.seed_base + self.runs as u64)
    }

    pub fn settings(&self) -> ExperimentSettings {
        ExperimentSettings {
            runs: self.runs,
            steps: self.steps,
            seed_base: self.seed_base,
            feature_dim: self.feature_dim,
            feature_ones: self.feature_ones,
            mu_samples: self.mu_samples,
        }
    }

    pub fn rerun_settings(&self) -> ExperimentSettings {
        ExperimentSettings {
            runs: self.rerun_runs(),
            seed_base: self.rerun_seed_base(),
            ..self.settings()
        }
    }

    pub fn grid(&self) -> ParameterGrid {
        self.grid.resolve()
    }

    pub fn instance_count(&self) -> usize {
        let g = self.grid();
        self.algorithms.iter().map(|&a| g.size(a)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_cover_the_full_sweep() {
        let c = SweepConfig::from_json("{}").unwrap();
        c.validate(false).unwrap();
        assert_eq!(c.instance_count(), 16_416);
        assert_eq!((c.steps, c.runs), (20_000, 50));
        assert_eq!(c.rerun_seed_base(), 50);
    }

    #[test]
    fn td_only() {
        let c =
            SweepConfig::from_json(r#"{"algorithms": ["td"], "runs": 1, "steps": 100}"#).unwrap();
        c.validate(false).unwrap();
        assert_eq!(c.instance_count(), 228);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            r#"{"algorithms": []}"#,
            r#"{"runs": 0}"#,
            r#"{"steps": 0}"#,
            r#"{"task": "mountain_car"}"#,
            r#"{"grid": {"alpha": [0.3]}}"#,
            r#"{"grid": {"alpha": []}}"#,
            r#"{"algorithms": ["td", "td"]}"#,
        ];
        for text in bad {
            let parsed = SweepConfig::from_json(text).and_then(|c| c.validate(false));
            assert!(parsed.is_err(), "{text} accepted");
        }
        assert!(SweepConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(SweepConfig::from_json(r#"{"algorithms": ["q_learning"]}"#).is_err());
        assert!(SweepConfig::from_json(r#"{"grid": {"gamma": [1]}}"#).is_err());
    }

    #[test]
    fn custom_grid_needs_permission() {
        let c = SweepConfig::from_json(r#"{"grid": {"alpha": [0.3]}}"#).unwrap();
        assert!(c.validate(false).is_err());
        assert!(c.validate(true).is_ok());
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = SweepConfig::from_json(r#"{"algorithms": ["gtd"], "grid": {"lambda": [0, 1]}}"#)
            .unwrap();
        let r = c.resolved();
        assert_eq!(r.grid.alpha.as_ref().unwrap().len(), 19);
        assert_eq!(r.grid.lambda, Some(vec![0.0, 1.0]));
        let back = SweepConfig::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.instance_count(), c.instance_count());
    }
}
