//! Numerical building blocks shared by the risk engines.

pub mod optim;
pub mod quad;

pub use optim::{bfgs, bisect_predicate, brent_root, golden_section, Minimum};
pub use quad::{
    integrate, integrate_lower, integrate_pieces, integrate_upper, Integral, QuadConfig,
};

/// Probability comparisons use this slack so cumulative sums of atom masses
/// agree with the nominal level they were built to hit.
pub const PROB_EPS: f64 = 1e-12;

/// `F >= alpha` up to rounding in cumulative sums.
#[inline]
pub fn prob_ge(cum: f64, alpha: f64) -> bool {
    cum >= alpha - PROB_EPS
}

/// `F > alpha` up to rounding in cumulative sums.
#[inline]
pub fn prob_gt(cum: f64, alpha: f64) -> bool {
    cum > alpha + PROB_EPS
}

/// Fixed-order mean, so parallel and serial callers reduce identically.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Batch-means standard error of the mean of `xs` over `batches` equal blocks.
pub fn batch_means_se(xs: &[f64], batches: usize) -> f64 {
    let b = batches.max(2).min(xs.len());
    let size = xs.len() / b;
    let means: Vec<f64> = (0..b)
        .map(|k| mean(&xs[k * size..(k + 1) * size]))
        .collect();
    let m = mean(&means);
    let var = means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}
