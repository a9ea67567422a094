use super::td::td_error;
use super::{LearnerState, StepParams};
use crate::env::Transition;
use crate::linalg::{axpy, decay_accumulate};

/// Followon trace and emphasis with unit interest:
/// `F = ρ_prev·decay·F_prev + 1`, `M = λ + (1−λ)F`.
#[inline]
pub fn emphasis_update(f_prev: f64, rho_prev: f64, decay: f64, lambda: f64) -> (f64, f64) {
    let f = rho_prev * decay * f_prev + 1.0;
    // λ + (1−λ)F rearranged so that F = 1 or λ = 1 give M = 1 exactly.
    (f, 1.0 + (1.0 - lambda) * (f - 1.0))
}

fn emphatic_step(st: &mut LearnerState, p: &StepParams, t: &Transition<'_>, decay: f64) -> f64 {
    let delta = td_error(&st.w, t);
    let (f, m) = emphasis_update(st.followon, st.prev.rho, decay, p.lambda);
    st.followon = f;
    decay_accumulate(&mut st.z, t.rho * st.prev.gamma * p.lambda, t.rho * m, t.x);
    axpy(&mut st.w, p.alpha * delta, &st.z);
    st.prev.record(t);
    delta
}

pub fn etd(st: &mut LearnerState, p: &StepParams, t: &Transition<'_>) -> f64 {
    let decay = st.prev.gamma;
    emphatic_step(st, p, t, decay)
}

/// ETD(λ, β). The followon still restarts at episode boundaries: `β` only
/// replaces `γ` inside an episode.
pub fn etd_beta(st: &mut LearnerState, p: &StepParams, t: &Transition<'_>) -> f64 {
    let decay = if st.prev.gamma > 0.0 { p.beta } else { 0.0 };
    emphatic_step(st, p, t, decay)
}
