use super::{LearnerState, StepParams};
use crate::env::Transition;
use crate::linalg::{axpy, decay_accumulate, dot};

/// `δ = r + γ' wᵀx' − wᵀx`
#[inline]
pub fn td_error(w: &[f64], t: &Transition<'_>) -> f64 {
    t.reward + t.gamma_next * dot(w, t.x_next) - dot(w, t.x)
}

/// `z ← ρ(γλz + x)`, shared by the TD and Gradient-TD learners.
#[inline]
pub(crate) fn importance_trace(z: &mut [f64], p: &StepParams, gamma: f64, t: &Transition<'_>) {
    decay_accumulate(z, t.rho * gamma * p.lambda, t.rho, t.x);
}

/// Off-policy TD(λ) with the importance ratio folded into the trace.
pub fn offpolicy_td(st: &mut LearnerState, p: &StepParams, t: &Transition<'_>) -> f64 {
    let delta = td_error(&st.w, t);
    importance_trace(&mut st.z, p, st.prev.gamma, t);
    axpy(&mut st.w, p.alpha * delta, &st.z);
    st.prev.record(t);
    delta
}

/// The same learner written with `ρ_t` on the update and `ρ_{t-1}` in the
/// trace decay. Produces the same weights as [`offpolicy_td`] up to rounding.
pub fn offpolicy_td_rho_on_update(
    st: &mut LearnerState,
    p: &StepParams,
    t: &Transition<'_>,
) -> f64 {
    let delta = td_error(&st.w, t);
    decay_accumulate(&mut st.z, st.prev.gamma * st.prev.rho * p.lambda, 1.0, t.x);
    axpy(&mut st.w, p.alpha * t.rho * delta, &st.z);
    st.prev.record(t);
    delta
}
