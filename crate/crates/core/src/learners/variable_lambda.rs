use super::td::td_error;
use super::{LearnerState, StepParams};
use crate::env::{Action, Policy, Transition};
use crate::linalg::{axpy, decay_accumulate};

/// Tree Backup(λ): the trace decays by the target probability of the
/// previous action.
pub fn tree_backup(st: &mut LearnerState, p: &StepParams, t: &Transition<'_>) -> f64 {
    let delta = td_error(&st.w, t);
    decay_accumulate(&mut st.z, st.prev.gamma * p.lambda * st.prev.pi, 1.0, t.x);
    axpy(&mut st.w, p.alpha * t.rho * delta, &st.z);
    st.prev.record(t);
    delta
}

/// V-trace with the trace ratio clipped at 1; the update ratio is not clipped.
pub fn vtrace(st: &mut LearnerState, p: &StepParams, t: &Transition<'_>) -> f64 {
    let delta = td_error(&st.w, t);
    let c = st.prev.rho.min(1.0);
    decay_accumulate(&mut st.z, st.prev.gamma * c * p.lambda, 1.0, t.x);
    axpy(&mut st.w, p.alpha * t.rho * delta, &st.z);
    st.prev.record(t);
    delta
}

/// `ψ₀` and `ψ_max` of ABTD for one pair of policies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AbtdScale {
    pub psi0: f64,
    pub psi_max: f64,
}

impl AbtdScale {
    /// Extremes of `max(b, π)` over state-action pairs that either policy
    /// can take. Pairs with `b = π = 0` are never visited and are skipped.
    pub fn from_policies(behavior: &Policy, target: &Policy) -> Self {
        let (mut hi, mut lo) = (0.0_f64, f64::INFINITY);
        for s in 0..behavior.num_states() {
            for a in Action::ALL {
                let m = behavior.prob(s, a).max(target.prob(s, a));
                if m > 0.0 {
                    hi = hi.max(m);
                    lo = lo.min(m);
                }
            }
        }
        AbtdScale {
            psi0: 1.0 / hi,
            psi_max: 1.0 / lo,
        }
    }

    /// `ψ(ζ) = 2ζψ₀ + max(0, 2ζ−1)(ψ_max − 2ψ₀)`
    pub fn psi(&self, zeta: f64) -> f64 {
        2.0 * zeta * self.psi0 + (2.0 * zeta - 1.0).max(0.0) * (self.psi_max - 2.0 * self.psi0)
    }
}

/// `ν = min(ψ, 1/max(b, π))`
#[inline]
pub fn abtd_nu(psi: f64, b: f64, pi: f64) -> f64 {
    psi.min(1.0 / b.max(pi))
}

/// ABTD(ζ): the trace decays by `ν_{t-1} π_{t-1}`. Capping `ν` at
/// `1/max(b, π)` keeps both `νπ` and `νb` at most 1.
pub fn abtd(st: &mut LearnerState, p: &StepParams, t: &Transition<'_>) -> f64 {
    let delta = td_error(&st.w, t);
    let nu = abtd_nu(p.psi, t.b, t.pi);
    decay_accumulate(&mut st.z, st.prev.gamma * st.prev.nu * st.prev.pi, 1.0, t.x);
    axpy(&mut st.w, p.alpha * t.rho * delta, &st.z);
    st.prev.record(t);
    st.prev.nu = nu;
    delta
}
