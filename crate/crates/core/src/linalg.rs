// Dense helpers for the small (d ≈ 6) vectors the learners carry. Callers
// guarantee matching lengths.

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += a * x`
#[inline]
pub(crate) fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `z = decay * z + scale * x`
#[inline]
pub(crate) fn decay_accumulate(z: &mut [f64], decay: f64, scale: f64, x: &[f64]) {
    debug_assert_eq!(z.len(), x.len());
    for (zi, xi) in z.iter_mut().zip(x) {
        *zi = decay * *zi + scale * xi;
    }
}

#[inline]
pub(crate) fn scale(z: &mut [f64], a: f64) {
    for zi in z.iter_mut() {
        *zi *= a;
    }
}

pub(crate) fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
