//! Log-domain arithmetic helpers.
//!
//! All belief and likelihood arithmetic in this crate lives in log space;
//! the multiplicative recursions underflow f64 after a few hundred rounds
//! otherwise.

/// log(Σ exp(x)) with max-shifting.
///
/// Returns `f64::NEG_INFINITY` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Shift a log vector in place so that its log-sum-exp is exactly zero,
/// i.e. `exp(xs)` sums to one.
pub fn normalize_log(xs: &mut [f64]) {
    let lse = log_sum_exp(xs);
    for x in xs.iter_mut() {
        *x -= lse;
    }
}

/// Max over index pairs of |a_i - b_i|.
pub fn linf_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
