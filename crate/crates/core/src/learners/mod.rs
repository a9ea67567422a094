//! Off-policy TD prediction learners with linear function approximation.
//!
//! Every algorithm consumes the same [`Transition`] stream and keeps its
//! mutable quantities in a [`LearnerState`]. Step functions are pure state
//! transitions: identical (state, transition, parameters) always produce a
//! bit-identical result.
//!
//! Episode boundaries need no special handling. The discount into the
//! current state, `γ_t`, is cached from the previous transition and is 0
//! right after a termination (and at stream start), which zeroes every trace
//! and followon decay.

mod emphatic;
mod gradient;
mod td;
mod variable_lambda;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::{Policy, Transition};
use crate::error::{Error, Result};
use crate::linalg::{dot, max_abs};

pub use emphatic::{emphasis_update, etd, etd_beta};
pub use gradient::{gtd, gtd2, htd, proximal_gtd2, tdrc};
pub use td::{offpolicy_td, offpolicy_td_rho_on_update, td_error};
pub use variable_lambda::{abtd, abtd_nu, tree_backup, vtrace, AbtdScale};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Td,
    Gtd,
    Gtd2,
    Htd,
    ProximalGtd2,
    Tdrc,
    Etd,
    EtdBeta,
    TreeBackup,
    Vtrace,
    Abtd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 11] = [
        Algorithm::Td,
        Algorithm::Gtd,
        Algorithm::Gtd2,
        Algorithm::Htd,
        Algorithm::ProximalGtd2,
        Algorithm::Tdrc,
        Algorithm::Etd,
        Algorithm::EtdBeta,
        Algorithm::TreeBackup,
        Algorithm::Vtrace,
        Algorithm::Abtd,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::Td => "td",
            Algorithm::Gtd => "gtd",
            Algorithm::Gtd2 => "gtd2",
            Algorithm::Htd => "htd",
            Algorithm::ProximalGtd2 => "proximal_gtd2",
            Algorithm::Tdrc => "tdrc",
            Algorithm::Etd => "etd",
            Algorithm::EtdBeta => "etd_beta",
            Algorithm::TreeBackup => "tree_backup",
            Algorithm::Vtrace => "vtrace",
            Algorithm::Abtd => "abtd",
        }
    }

    pub fn uses_lambda(self) -> bool {
        self != Algorithm::Abtd
    }

    /// Whether the secondary step-size ratio is a swept parameter.
    pub fn sweeps_eta(self) -> bool {
        matches!(
            self,
            Algorithm::Gtd | Algorithm::Gtd2 | Algorithm::Htd | Algorithm::ProximalGtd2
        )
    }

    pub fn has_secondary_weights(self) -> bool {
        self.sweeps_eta() || self == Algorithm::Tdrc
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

/// One algorithm with its parameters. Parameters that do not apply to the
/// algorithm must be `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Secondary step size is `η · α`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Followon decay of ETD(λ, β).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    /// TDRC regularization; defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tdrc_reg: Option<f64>,
}

impl LearnerConfig {
    pub fn new(algorithm: Algorithm, alpha: f64) -> Self {
        LearnerConfig {
            algorithm,
            alpha,
            lambda: None,
            eta: None,
            beta: None,
            zeta: None,
            tdrc_reg: None,
        }
    }

    pub fn lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn beta(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn zeta(mut self, zeta: f64) -> Self {
        self.zeta = Some(zeta);
        self
    }

    pub fn tdrc_reg(mut self, reg: f64) -> Self {
        self.tdrc_reg = Some(reg);
        self
    }

    pub fn alpha_v(&self) -> f64 {
        self.eta.unwrap_or(1.0) * self.alpha
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.algorithm;
        let unit = |name: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::config(format!("{a}: {name}={x} outside [0, 1]")))
            }
        };
        let nonneg = |name: &str, x: f64| {
            if x >= 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!(
                    "{a}: {name}={x} must be finite and >= 0"
                )))
            }
        };
        let required = |name: &str, x: Option<f64>| {
            x.ok_or_else(|| Error::config(format!("{a}: missing parameter {name}")))
        };
        let forbidden = |name: &str, x: Option<f64>| match x {
            Some(_) => Err(Error::config(format!(
                "{a}: parameter {name} does not apply"
            ))),
            None => Ok(()),
        };

        nonneg("alpha", self.alpha)?;
        if a.uses_lambda() {
            unit("lambda", required("lambda", self.lambda)?)?;
        } else {
            forbidden("lambda", self.lambda)?;
        }
        if a.sweeps_eta() {
            nonneg("eta", required("eta", self.eta)?)?;
        } else if a == Algorithm::Tdrc {
            self.eta.map_or(Ok(()), |x| nonneg("eta", x))?;
        } else {
            forbidden("eta", self.eta)?;
        }
        if a == Algorithm::EtdBeta {
            unit("beta", required("beta", self.beta)?)?;
        } else {
            forbidden("beta", self.beta)?;
        }
        if a == Algorithm::Abtd {
            unit("zeta", required("zeta", self.zeta)?)?;
        } else {
            forbidden("zeta", self.zeta)?;
        }
        if a == Algorithm::Tdrc {
            self.tdrc_reg.map_or(Ok(()), |x| nonneg("tdrc_reg", x))?;
        } else {
            forbidden("tdrc_reg", self.tdrc_reg)?;
        }
        Ok(())
    }
}

/// Scalars a step function reads, resolved once from a [`LearnerConfig`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepParams {
    pub alpha: f64,
    pub alpha_v: f64,
    pub lambda: f64,
    pub beta: f64,
    pub tdrc_reg: f64,
    /// ABTD's `ψ(ζ)`.
    pub psi: f64,
}

impl StepParams {
    pub fn resolve(config: &LearnerConfig, behavior: &Policy, target: &Policy) -> Result<Self> {
        config.validate()?;
        let psi = match config.zeta {
            Some(zeta) => AbtdScale::from_policies(behavior, target).psi(zeta),
            None => 0.0,
        };
        Ok(StepParams {
            alpha: config.alpha,
            alpha_v: config.alpha_v(),
            lambda: config.lambda.unwrap_or(0.0),
            beta: config.beta.unwrap_or(0.0),
            tdrc_reg: config.tdrc_reg.unwrap_or(1.0),
            psi,
        })
    }
}

/// Scalars remembered from the previous step. The initial values make the
/// first step of a stream an episode start (`gamma = 0`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrevStep {
    pub gamma: f64,
    pub rho: f64,
    pub pi: f64,
    pub b: f64,
    pub nu: f64,
}

impl Default for PrevStep {
    fn default() -> Self {
        PrevStep {
            gamma: 0.0,
            rho: 1.0,
            pi: 1.0,
            b: 1.0,
            nu: 0.0,
        }
    }
}

impl PrevStep {
    fn record(&mut self, t: &Transition<'_>) {
        self.gamma = t.gamma_next;
        self.rho = t.rho;
        self.pi = t.pi;
        self.b = t.b;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnerState {
    pub w: Vec<f64>,
    /// Secondary weights (Gradient-TD family).
    pub v: Vec<f64>,
    pub z: Vec<f64>,
    /// On-policy trace (HTD).
    pub z_b: Vec<f64>,
    /// Followon trace (emphatic learners).
    pub followon: f64,
    pub prev: PrevStep,
}

impl LearnerState {
    pub fn new(dim: usize) -> Self {
        LearnerState {
            w: vec![0.0; dim],
            v: vec![0.0; dim],
            z: vec![0.0; dim],
            z_b: vec![0.0; dim],
            followon: 0.0,
            prev: PrevStep::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(&self.v).all(|x| x.is_finite())
    }

    pub fn max_abs_weight(&self) -> f64 {
        max_abs(&self.w)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub state: LearnerState,
    pub td_error: f64,
}

pub type StepFn = fn(&mut LearnerState, &StepParams, &Transition<'_>) -> f64;

fn step_fn(algorithm: Algorithm) -> StepFn {
    match algorithm {
        Algorithm::Td => offpolicy_td,
        Algorithm::Gtd => gtd,
        Algorithm::Gtd2 => gtd2,
        Algorithm::Htd => htd,
        Algorithm::ProximalGtd2 => proximal_gtd2,
        Algorithm::Tdrc => tdrc,
        Algorithm::Etd => etd,
        Algorithm::EtdBeta => etd_beta,
        Algorithm::TreeBackup => tree_backup,
        Algorithm::Vtrace => vtrace,
        Algorithm::Abtd => abtd,
    }
}

/// A configured learner driving one [`LearnerState`].
#[derive(Clone, Debug)]
pub struct Learner {
    config: LearnerConfig,
    params: StepParams,
    state: LearnerState,
    step: StepFn,
}

impl Learner {
    pub fn new(
        config: &LearnerConfig,
        dim: usize,
        behavior: &Policy,
        target: &Policy,
    ) -> Result<Self> {
        Ok(Learner {
            params: StepParams::resolve(config, behavior, target)?,
            config: config.clone(),
            state: LearnerState::new(dim),
            step: step_fn(config.algorithm),
        })
    }

    /// Resumes from an explicit state, e.g. a hand-built scenario.
    pub fn with_state(mut self, state: LearnerState) -> Self {
        self.state = state;
        self
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn params(&self) -> &StepParams {
        &self.params
    }

    pub fn state(&self) -> &LearnerState {
        &self.state
    }

    pub fn weights(&self) -> &[f64] {
        &self.state.w
    }

    /// Applies one transition in place and returns the TD error.
    pub fn step(&mut self, t: &Transition<'_>) -> f64 {
        debug_assert_eq!(t.x.len(), self.state.dim());
        (self.step)(&mut self.state, &self.params, t)
    }

    /// The state after `t`, leaving `self` untouched.
    pub fn peek(&self, t: &Transition<'_>) -> StepOutcome {
        let mut state = self.state.clone();
        let td_error = (self.step)(&mut state, &self.params, t);
        StepOutcome { state, td_error }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        dot(&self.state.w, x)
    }
}
