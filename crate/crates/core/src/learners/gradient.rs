use super::td::{importance_trace, td_error};
use super::{LearnerState, StepParams};
use crate::env::Transition;
use crate::linalg::{axpy, decay_accumulate, dot, scale};

/// `v ← v + α_v (δz − (vᵀx)x)`, the least-squares estimate of the expected
/// TD update shared by GTD, GTD2 and TDRC.
#[inline]
fn secondary_update(v: &mut [f64], alpha_v: f64, delta: f64, vx: f64, z: &[f64], x: &[f64]) {
    axpy(v, alpha_v * delta, z);
    axpy(v, -alpha_v * vx, x);
}

/// Gradient correction term `γ'(1−λ)(vᵀz)`, applied along `x'`.
#[inline]
fn correction(p: &StepParams, t: &Transition<'_>, vz: f64) -> f64 {
    t.gamma_next * (1.0 - p.lambda) * vz
}

pub fn gtd(st: &mut LearnerState, p: &StepParams, t: &Transition<'_>) -> f64 {
    let delta = td_error(&st.w, t);
    importance_trace(&mut st.z, p, st.prev.gamma, t);
    let vx = dot(&st.v, t.x);
    let vz = dot(&st.v, &st.z);
    secondary_update(&mut st.v, p.alpha_v, delta, vx, &st.z, t.x);
    axpy(&mut st.w, p.alpha * delta, &st.z);
    axpy(&mut st.w, -p.alpha * correction(p, t, vz), t.x_next);
    st.prev.record(t);
    delta
}

pub fn gtd2(st: &mut LearnerState, p: &StepParams, t: &Transition<'_>) -> f64 {
    let delta = td_error(&st.w, t);
    importance_trace(&mut st.z, p, st.prev.gamma, t);
    let vx = dot(&st.v, t.x);
    let vz = dot(&st.v, &st.z);
    secondary_update(&mut st.v, p.alpha_v, delta, vx, &st.z, t.x);
    axpy(&mut st.w, p.alpha * vx, t.x);
    axpy(&mut st.w, -p.alpha * correction(p, t, vz), t.x_next);
    st.prev.record(t);
    delta
}

/// GTD with an L2 penalty on `v`; the primary update is GTD's.
pub fn tdrc(st: &mut LearnerState, p: &StepParams, t: &Transition<'_>) -> f64 {
    let delta = td_error(&st.w, t);
    importance_trace(&mut st.z, p, st.prev.gamma, t);
    let vx = dot(&st.v, t.x);
    let vz = dot(&st.v, &st.z);
    scale(&mut st.v, 1.0 - p.alpha_v * p.tdrc_reg);
    secondary_update(&mut st.v, p.alpha_v, delta, vx, &st.z, t.x);
    axpy(&mut st.w, p.alpha * delta, &st.z);
    axpy(&mut st.w, -p.alpha * correction(p, t, vz), t.x_next);
    st.prev.record(t);
    delta
}

/// Hybrid TD: an importance-weighted trace `z` alongside an unweighted one
/// `z_b`. On-policy the two traces coincide and the update is TD(λ).
pub fn htd(st: &mut LearnerState, p: &StepParams, t: &Transition<'_>) -> f64 {
    let delta = td_error(&st.w, t);
    let gamma = st.prev.gamma;
    importance_trace(&mut st.z, p, gamma, t);
    decay_accumulate(&mut st.z_b, gamma * p.lambda, 1.0, t.x);
    let v_zb = dot(&st.v, &st.z_b);
    let v_zdiff = dot(&st.v, &st.z) - dot(&st.v, &st.z_b);

    // (x − γ'x') scaled per component, without a temporary vector.
    let (alpha, alpha_v, g) = (p.alpha, p.alpha_v, t.gamma_next);
    let (a_delta, av_delta) = (alpha * delta, alpha_v * delta);
    for i in 0..st.v.len() {
        let dx = t.x[i] - g * t.x_next[i];
        st.v[i] += av_delta * st.z[i] - alpha_v * dx * v_zb;
        st.w[i] += a_delta * st.z[i] + alpha * dx * v_zdiff;
    }
    st.prev.record(t);
    delta
}

/// Proximal GTD2: a GTD2 half step, then a second GTD2 step from the
/// original weights using the TD error and secondary weights of the half
/// step. Both steps share the trace `z`.
pub fn proximal_gtd2(st: &mut LearnerState, p: &StepParams, t: &Transition<'_>) -> f64 {
    let delta = td_error(&st.w, t);
    importance_trace(&mut st.z, p, st.prev.gamma, t);
    let (x, xn, z) = (t.x, t.x_next, &st.z);
    let (alpha, alpha_v, g, lam) = (p.alpha, p.alpha_v, t.gamma_next, p.lambda);

    let vx = dot(&st.v, x);
    let vz = dot(&st.v, z);
    let (xx, xxn, xnxn) = (dot(x, x), dot(x, xn), dot(xn, xn));
    let (zx, zz) = (dot(z, x), dot(z, z));

    // Half-step quantities, expanded through the inner products so that no
    // intermediate weight vectors are materialized.
    let corr = g * (1.0 - lam) * vz;
    let wh_x = dot(&st.w, x) + alpha * vx * xx - alpha * corr * xxn;
    let wh_xn = dot(&st.w, xn) + alpha * vx * xxn - alpha * corr * xnxn;
    let delta_half = t.reward + g * wh_xn - wh_x;
    let vh_x = vx + alpha_v * delta * zx - alpha_v * vx * xx;
    let vh_z = vz + alpha_v * delta * zz - alpha_v * vx * zx;

    secondary_update(&mut st.v, alpha_v, delta_half, vh_x, &st.z, x);
    axpy(&mut st.w, alpha * vh_x, x);
    axpy(&mut st.w, -alpha * g * (1.0 - lam) * vh_z, xn);
    st.prev.record(t);
    delta
}
