//! Distortion (Choquet) risk measures and the quantile-based functionals
//! built on them.

mod distortion;
mod spec;

pub use distortion::{DistortionFunction, DistortionKind, Jump};
pub use spec::{MeasureKind, RiskMeasureSpec};

use crate::dist::{DiscreteDistribution, Distribution};
use crate::error::{check_prob, invalid, Result, RiskError};
use crate::numeric::{integrate_pieces, QuadConfig};

/// Default size of the grid used to discretise a spectrum.
pub const DEFAULT_SPECTRAL_GRID: usize = 1 << 14;

fn quad_cfg() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-12,
        rel_tol: 1e-10,
        max_intervals: 4000,
    }
}

/// Closed form on finitely supported laws, quadrature otherwise.
pub fn choquet(d: &Distribution, h: &DistortionFunction, s: f64) -> Result<f64> {
    match d.as_discrete() {
        Some(disc) => Ok(choquet_discrete(disc, h, s)),
        None => match d.to_discrete() {
            Some(disc) => Ok(choquet_discrete(&disc, h, s)),
            None => choquet_quadrature(d, h, s),
        },
    }
}

/// `g(p_1) x_1 + sum (g(F_i) - g(F_{i-1})) x_i` with `g(u) = 1 - h(1 - u)`.
pub fn choquet_discrete(d: &DiscreteDistribution, h: &DistortionFunction, s: f64) -> f64 {
    let mut prev = 0.0;
    let mut total = 0.0;
    for (x, cum) in d.atoms().iter().zip(d.cumulative()) {
        let g = 1.0 - h.eval(1.0 - cum);
        total += (g - prev) * x;
        prev = g;
    }
    s * total
}

fn check_integrable(d: &Distribution, h: &DistortionFunction) -> Result<()> {
    let (lo, hi) = d.support();
    let diverges = |infinite: bool, index: Option<f64>, exponent: f64| {
        infinite && (exponent == 0.0 || index.is_some_and(|a| a * exponent <= 1.0))
    };
    if diverges(hi.is_infinite(), d.upper_tail_index(), h.zero_exponent()) {
        return Err(RiskError::NonIntegrable(format!(
            "upper tail of the law is too heavy for {:?}",
            h.kind()
        )));
    }
    if diverges(lo.is_infinite(), d.lower_tail_index(), h.one_exponent()) {
        return Err(RiskError::NonIntegrable(format!(
            "lower tail of the law is too heavy for {:?}",
            h.kind()
        )));
    }
    Ok(())
}

/// `s (a + int_a^inf h(S(x)) dx + int_-inf^a (h(S(x)) - 1) dx)` for an
/// anchor `a` at the median, split at atoms and where `S` crosses a jump or
/// kink of `h`.
pub fn choquet_quadrature(d: &Distribution, h: &DistortionFunction, s: f64) -> Result<f64> {
    check_integrable(d, h)?;
    let (lo, hi) = d.support();
    let mut breaks = d.atoms();
    if d.as_discrete().is_none() {
        breaks.extend(d.scale_points());
    }
    for t in h.critical_points() {
        let u = 1.0 - t;
        if let Ok(q) = d.quantile_left(u) {
            breaks.push(q);
        }
        if let Ok(q) = d.quantile_right(u) {
            breaks.push(q);
        }
    }
    let anchor = d.quantile_left(0.5)?;
    let integrand = |x: f64| h.eval(d.survival(x));
    let wrap = |e: RiskError| RiskError::NonIntegrable(e.to_string());
    let upper = integrate_pieces(integrand, anchor, hi, &breaks, quad_cfg()).map_err(wrap)?;
    let lower =
        integrate_pieces(|x| integrand(x) - 1.0, lo, anchor, &breaks, quad_cfg()).map_err(wrap)?;
    Ok(s * (anchor + upper.value + lower.value))
}

/// Left quantile `inf{x | F(x) >= alpha}`.
pub fn var(d: &Distribution, alpha: f64) -> Result<f64> {
    d.quantile_left(alpha)
}

/// Mean of the alpha-tail law.
pub fn es(d: &Distribution, alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid(format!("alpha must lie in [0,1), got {alpha}")));
    }
    if let Some(a) = d.upper_tail_index() {
        if a <= 1.0 {
            return Err(RiskError::NonIntegrable(format!(
                "non-integrable tail: tail index {a}"
            )));
        }
    }
    if let Some(disc) = d.to_discrete() {
        return Ok(disc.tail(alpha)?.mean());
    }
    if alpha == 0.0 {
        return mean(d);
    }
    d.tail(alpha)?.mean()
}

/// Median of the alpha-tail law, read as `VaR_{(1+alpha)/2}`.
pub fn ms(d: &Distribution, alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid(format!("alpha must lie in [0,1), got {alpha}")));
    }
    var(d, 0.5 * (1.0 + alpha))
}

pub fn mean(d: &Distribution) -> Result<f64> {
    d.mean()
}

/// `c q_alpha^- + (1 - c) q_alpha^+`.
pub fn quantile_mix(d: &Distribution, alpha: f64, c: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0,1), got {alpha}")));
    }
    check_prob("c", c)?;
    let lo = d.quantile_left(alpha)?;
    let hi = d.quantile_right(alpha)?;
    Ok(c * lo + (1.0 - c) * hi)
}

/// `c ess inf + (1 - c) ess sup`.
pub fn endpoint_mix(d: &Distribution, c: f64) -> Result<f64> {
    check_prob("c", c)?;
    let (lo, hi) = d.support();
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(RiskError::InfiniteEndpoint);
    }
    Ok(c * lo + (1.0 - c) * hi)
}

/// `sum_u Delta({u}) VaR_u`.
pub fn gen_spectral(d: &Distribution, delta: &DiscreteDistribution) -> Result<f64> {
    if delta.min() <= 0.0 || delta.max() > 1.0 {
        return Err(invalid("spectral weights must sit on (0,1]"));
    }
    let mut total = 0.0;
    for (u, w) in delta.atoms().iter().zip(delta.probs()) {
        total += w * d.quantile_left(*u)?;
    }
    Ok(total)
}

/// Midpoint discretisation of a spectrum `phi` on `(0,1)`: atoms at
/// `(k - 1/2)/n` with masses `phi/n`, renormalised. The error is O(1/n).
pub fn discretize_spectrum<F: Fn(f64) -> f64>(phi: F, n: usize) -> Result<DiscreteDistribution> {
    if n == 0 {
        return Err(invalid("spectral grid needs at least one point"));
    }
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let u = (k as f64 + 0.5) / n as f64;
        let w = phi(u);
        if !(w.is_finite() && w >= 0.0) {
            return Err(invalid(format!(
                "spectrum must be finite and nonnegative, got {w} at {u}"
            )));
        }
        if w > 0.0 {
            pairs.push((u, w / n as f64));
        }
    }
    let total: f64 = pairs.iter().map(|(_, w)| w).sum();
    if !(total > 0.0) {
        return Err(invalid("spectrum has no mass"));
    }
    for p in &mut pairs {
        p.1 /= total;
    }
    DiscreteDistribution::from_pairs(&pairs)
}

/// Uniform weights on `n` midpoints of `(lo, hi)`.
pub fn uniform_spectrum(lo: f64, hi: f64, n: usize) -> Result<DiscreteDistribution> {
    if !(0.0 <= lo && lo < hi && hi <= 1.0) || n == 0 {
        return Err(invalid(format!("bad spectrum range ({lo}, {hi})")));
    }
    let atoms: Vec<f64> = (0..n)
        .map(|k| lo + (k as f64 + 0.5) * (hi - lo) / n as f64)
        .collect();
    DiscreteDistribution::new(atoms, vec![1.0 / n as f64; n])
}
