//! Small numeric helpers.
//!
//! Dot products here are plain sequential folds on purpose: the test oracles
//! recompute scores with naive loops and the acceptance suite requires exact
//! agreement, so the score path must not be re-associated or unrolled.

/// Sequential dot product.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

/// Euclidean norm.
#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `[v]_+`.
#[inline]
pub fn pos(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// ln(k * e^ln_a + 1) computed without overflowing, for k, a > 0.
pub fn ln_scaled_plus_one(k: f64, ln_a: f64) -> f64 {
    let shifted = k.ln() + ln_a;
    if shifted > 0.0 {
        shifted + (-shifted).exp().ln_1p()
    } else {
        shifted.exp().ln_1p()
    }
}
