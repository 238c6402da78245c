use std::fmt::Write as _;

use crate::dist::{Distribution, ParametricDistribution};
use crate::error::{invalid, Result};
use crate::measures;
use crate::numeric::{batch_means_se, brent_root, mean};

use super::{
    expected_score, score, ExpectationMethod, Forecast, G2Preset, ScoringFunction, MC_BATCHES,
};

/// Expected joint scores of the two misreporting strategies at scale `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub x: f64,
    /// Honest VaR, ES scaled by `x`.
    pub bank: f64,
    /// VaR scaled by `x`, honest ES.
    pub benchmark: f64,
}

/// Monte-Carlo counterpart of [`CurveRow`] with batch-means standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McCurveRow {
    pub x: f64,
    pub bank: f64,
    pub bank_se: f64,
    pub benchmark: f64,
    pub benchmark_se: f64,
}

struct Setup {
    law: Distribution,
    var: f64,
    es: f64,
    score: ScoringFunction,
}

fn setup(mu: f64, sigma: f64, alpha: f64, k: f64, g2: G2Preset) -> Result<Setup> {
    if !(k.is_finite() && k > 0.0) {
        return Err(invalid(format!("scale must be positive, got {k}")));
    }
    let law: Distribution = ParametricDistribution::normal(k * mu, k * sigma)?.into();
    let var = measures::var(&law, alpha)?;
    let es = measures::es(&law, alpha)?;
    Ok(Setup {
        law,
        var,
        es,
        score: ScoringFunction::joint_var_es(alpha, g2)?,
    })
}

fn check_grid(x_grid: &[f64]) -> Result<()> {
    if let Some(x) = x_grid.iter().find(|x| !(**x > 0.0 && **x <= 1.0)) {
        return Err(invalid(format!("grid point {x} outside (0,1]")));
    }
    Ok(())
}

/// The true `(VaR, ES)` of `Normal(k mu, (k sigma)^2)`.
pub fn true_pair(mu: f64, sigma: f64, alpha: f64, k: f64) -> Result<(f64, f64)> {
    let s = setup(mu, sigma, alpha, k, G2Preset::Logistic)?;
    Ok((s.var, s.es))
}

/// Quadrature curves for the loss `Normal(k mu, (k sigma)^2)`.
pub fn counterexample_curves(
    mu: f64,
    sigma: f64,
    alpha: f64,
    k: f64,
    x_grid: &[f64],
    g2: G2Preset,
) -> Result<Vec<CurveRow>> {
    check_grid(x_grid)?;
    let s = setup(mu, sigma, alpha, k, g2)?;
    x_grid
        .iter()
        .map(|&x| {
            let q = ExpectationMethod::Quadrature;
            let bank = expected_score(&s.score, Forecast::Pair(s.var, x * s.es), &s.law, q)?.value;
            let benchmark =
                expected_score(&s.score, Forecast::Pair(x * s.var, s.es), &s.law, q)?.value;
            Ok(CurveRow { x, bank, benchmark })
        })
        .collect()
}

/// The same curves by Monte Carlo on one shared sample of `n` losses.
#[allow(clippy::too_many_arguments)]
pub fn counterexample_monte_carlo(
    mu: f64,
    sigma: f64,
    alpha: f64,
    k: f64,
    x_grid: &[f64],
    g2: G2Preset,
    n: usize,
    seed: u64,
) -> Result<Vec<McCurveRow>> {
    check_grid(x_grid)?;
    if n < MC_BATCHES {
        return Err(invalid(format!("need at least {MC_BATCHES} draws")));
    }
    let s = setup(mu, sigma, alpha, k, g2)?;
    let ys = s.law.sample(n, seed);
    let scores = |f: Forecast| {
        ys.iter()
            .map(|y| score(&s.score, f, *y))
            .collect::<Result<Vec<f64>>>()
    };
    x_grid
        .iter()
        .map(|&x| {
            let b = scores(Forecast::Pair(s.var, x * s.es))?;
            let m = scores(Forecast::Pair(x * s.var, s.es))?;
            Ok(McCurveRow {
                x,
                bank: mean(&b),
                bank_se: batch_means_se(&b, MC_BATCHES),
                benchmark: mean(&m),
                benchmark_se: batch_means_se(&m, MC_BATCHES),
            })
        })
        .collect()
}

/// Smallest `x` in `[lo, hi]` above which the bank curve stays strictly
/// below the benchmark, located on a 1000-cell scan and refined by root
/// finding. `None` when the bank curve is not below the benchmark just
/// under `hi`; `Some(lo)` when no crossing is found on `[lo, hi]`.
pub fn dominance_boundary(
    mu: f64,
    sigma: f64,
    alpha: f64,
    k: f64,
    g2: G2Preset,
    lo: f64,
    hi: f64,
) -> Result<Option<f64>> {
    if !(lo > 0.0 && lo < hi && hi <= 1.0) {
        return Err(invalid(format!("bad range [{lo}, {hi}]")));
    }
    let s = setup(mu, sigma, alpha, k, g2)?;
    let gap = |x: f64| -> Result<f64> {
        let q = ExpectationMethod::Quadrature;
        let bank = expected_score(&s.score, Forecast::Pair(s.var, x * s.es), &s.law, q)?.value;
        let benchmark = expected_score(&s.score, Forecast::Pair(x * s.var, s.es), &s.law, q)?.value;
        Ok(bank - benchmark)
    };
    let cells = 1000;
    let step = (hi - lo) / cells as f64;
    // Both curves meet at x = 1, so the scan starts one cell below `hi`.
    let mut upper = hi - step;
    if gap(upper)? >= 0.0 {
        return Ok(None);
    }
    while upper - step >= lo - 1e-12 {
        let lower = upper - step;
        if gap(lower)? >= 0.0 {
            let root = brent_root(|x| gap(x).unwrap_or(f64::NAN), lower, upper, 1e-12)?;
            return Ok(Some(root));
        }
        upper = lower;
    }
    Ok(Some(lo))
}

/// CSV with header `x,bank_score,benchmark_score`.
pub fn curves_to_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from("x,bank_score,benchmark_score\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.x, r.bank, r.benchmark);
    }
    out
}
