//! Scoring functions, expected-score minimisation and the convex-level-set
//! machinery that separates elicitable functionals from ES.

mod cls;
mod counterexample;

pub use cls::{
    convex_level_set_check, match_last_atom, random_matched_pair, search_cls_violation, ClsOutcome,
    LevelSetWitness,
};
pub use counterexample::{
    counterexample_curves, counterexample_monte_carlo, curves_to_csv, dominance_boundary,
    true_pair, CurveRow, McCurveRow,
};

use std::fmt;
use std::sync::Arc;

use crate::dist::{Distribution, ParametricDistribution};
use crate::error::{check_len, invalid, Result, RiskError};
use crate::numeric::{batch_means_se, bfgs, bisect_predicate, golden_section, mean, QuadConfig};

/// Number of batches behind every Monte-Carlo standard error.
pub const MC_BATCHES: usize = 20;

/// Strictly increasing map applied inside the quantile score.
#[derive(Clone)]
pub enum Transform {
    Identity,
    /// `sign(x) |x|^(1/(2n+1))`.
    OddRoot(u32),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => write!(f, "Identity"),
            Self::OddRoot(n) => write!(f, "OddRoot({n})"),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Transform {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Self::Identity => x,
            Self::OddRoot(n) => x.signum() * x.abs().powf(1.0 / f64::from(2 * n + 1)),
            Self::Custom(g) => g(x),
        }
    }

    /// Moment order the transform needs from the law.
    fn moment(&self) -> f64 {
        match self {
            Self::OddRoot(n) => 1.0 / f64::from(2 * n + 1),
            _ => 1.0,
        }
    }
}

/// The `G2` preset of the joint (VaR, ES) score; `G1` is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum G2Preset {
    /// `G2 = exp`, antiderivative `exp`.
    Exp,
    /// `G2 = e^x / (1 + e^x)`, antiderivative `log(1 + e^x)`.
    Logistic,
}

impl G2Preset {
    pub fn g2(self, x: f64) -> f64 {
        match self {
            Self::Exp => x.exp(),
            Self::Logistic => {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            }
        }
    }

    pub fn antiderivative(self, x: f64) -> f64 {
        match self {
            Self::Exp => x.exp(),
            Self::Logistic => {
                if x > 0.0 {
                    x + (-x).exp().ln_1p()
                } else {
                    x.exp().ln_1p()
                }
            }
        }
    }
}

impl std::str::FromStr for G2Preset {
    type Err = RiskError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exp" => Ok(Self::Exp),
            "logistic" => Ok(Self::Logistic),
            other => Err(RiskError::Parse(format!("unknown G2 preset `{other}`"))),
        }
    }
}

impl fmt::Display for G2Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exp => "exp",
            Self::Logistic => "logistic",
        })
    }
}

/// A forecasting objective `S(forecast, realised)`.
#[derive(Debug, Clone)]
pub enum ScoringFunction {
    Quantile { alpha: f64, g: Transform },
    SquaredError,
    AbsoluteError,
    JointVarEs { alpha: f64, g2: G2Preset },
}

/// A point forecast or a (VaR, ES) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Forecast {
    Point(f64),
    Pair(f64, f64),
}

impl ScoringFunction {
    pub fn quantile(alpha: f64) -> Result<Self> {
        Self::quantile_with(alpha, Transform::Identity)
    }

    /// Checks that `g` is strictly increasing on a test grid.
    pub fn quantile_with(alpha: f64, g: Transform) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0,1), got {alpha}")));
        }
        let grid: Vec<f64> = (-200..=200).map(|k| f64::from(k) * 0.05).collect();
        if grid.windows(2).any(|w| !(g.apply(w[0]) < g.apply(w[1]))) {
            return Err(invalid("quantile transform must be strictly increasing"));
        }
        Ok(Self::Quantile { alpha, g })
    }

    pub fn joint_var_es(alpha: f64, g2: G2Preset) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0,1), got {alpha}")));
        }
        if g2.g2(-50.0).abs() >= 1e-12 {
            return Err(invalid("G2 must vanish at minus infinity"));
        }
        Ok(Self::JointVarEs { alpha, g2 })
    }

    fn is_joint(&self) -> bool {
        matches!(self, Self::JointVarEs { .. })
    }

    /// Moment order the expected score needs from the law.
    fn moment(&self) -> f64 {
        match self {
            Self::Quantile { g, .. } => g.moment(),
            Self::SquaredError => 2.0,
            Self::AbsoluteError | Self::JointVarEs { .. } => 1.0,
        }
    }

    fn split_point(&self, f: Forecast) -> f64 {
        match f {
            Forecast::Point(x) | Forecast::Pair(x, _) => x,
        }
    }
}

/// `S(forecast, y)`.
pub fn score(s: &ScoringFunction, forecast: Forecast, y: f64) -> Result<f64> {
    match (s, forecast) {
        (ScoringFunction::Quantile { alpha, g }, Forecast::Point(x)) => {
            let ind = if x >= y { 1.0 } else { 0.0 };
            Ok((ind - alpha) * (g.apply(x) - g.apply(y)))
        }
        (ScoringFunction::SquaredError, Forecast::Point(x)) => Ok((x - y) * (x - y)),
        (ScoringFunction::AbsoluteError, Forecast::Point(x)) => Ok((x - y).abs()),
        (ScoringFunction::JointVarEs { alpha, g2 }, Forecast::Pair(x1, x2)) => {
            let w = g2.g2(-x2);
            let ind = if x1 >= y { 1.0 } else { 0.0 };
            let exceed = if x1 < y {
                (y - x1) / (1.0 - alpha)
            } else {
                0.0
            };
            Ok((ind - alpha) * (x1 - y) + w * exceed + w * (x1 - x2) - g2.antiderivative(-x2))
        }
        (s, f) => Err(invalid(format!(
            "forecast {f:?} has the wrong arity for {}",
            if s.is_joint() {
                "a joint score"
            } else {
                "a scalar score"
            }
        ))),
    }
}

/// How to integrate a score against a law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpectationMethod {
    /// Exact sums on finitely supported laws; bias plus variance for squared
    /// error under a normal law.
    Closed,
    Quadrature,
    MonteCarlo {
        n: usize,
        seed: u64,
    },
}

/// An expected score, with a batch-means standard error for Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreEstimate {
    pub value: f64,
    pub std_error: Option<f64>,
}

fn check_score_integrable(s: &ScoringFunction, d: &Distribution) -> Result<()> {
    let need = s.moment();
    for idx in [d.upper_tail_index(), d.lower_tail_index()]
        .into_iter()
        .flatten()
    {
        if idx <= need {
            return Err(RiskError::NonIntegrableScore(format!(
                "law has tail index {idx}, the score needs moments of order {need}"
            )));
        }
    }
    Ok(())
}

/// `int S(forecast, y) dF(y)`.
pub fn expected_score(
    s: &ScoringFunction,
    forecast: Forecast,
    d: &Distribution,
    method: ExpectationMethod,
) -> Result<ScoreEstimate> {
    score(s, forecast, 0.0)?;
    check_score_integrable(s, d)?;
    match method {
        ExpectationMethod::Closed => {
            if let Some(disc) = d.to_discrete() {
                let mut total = 0.0;
                for (y, p) in disc.atoms().iter().zip(disc.probs()) {
                    total += p * score(s, forecast, *y)?;
                }
                return Ok(ScoreEstimate {
                    value: total,
                    std_error: None,
                });
            }
            match (s, forecast, d) {
                (
                    ScoringFunction::SquaredError,
                    Forecast::Point(x),
                    Distribution::Parametric(ParametricDistribution::Normal { mu, sigma }),
                ) => Ok(ScoreEstimate {
                    value: (x - mu) * (x - mu) + sigma * sigma,
                    std_error: None,
                }),
                _ => Err(invalid("no closed form for this score and law")),
            }
        }
        ExpectationMethod::Quadrature => {
            let split = s.split_point(forecast);
            let value = d
                .expect(
                    |y| score(s, forecast, y).unwrap_or(f64::NAN),
                    &[split],
                    QuadConfig::default(),
                )
                .map_err(|e| RiskError::NonIntegrableScore(e.to_string()))?;
            Ok(ScoreEstimate {
                value,
                std_error: None,
            })
        }
        ExpectationMethod::MonteCarlo { n, seed } => {
            if n < MC_BATCHES {
                return Err(invalid(format!("need at least {MC_BATCHES} draws")));
            }
            let ys = d.sample(n, seed);
            let vals = ys
                .iter()
                .map(|y| score(s, forecast, *y))
                .collect::<Result<Vec<f64>>>()?;
            Ok(ScoreEstimate {
                value: mean(&vals),
                std_error: Some(batch_means_se(&vals, MC_BATCHES)),
            })
        }
    }
}

/// Exact on finitely supported laws, quadrature otherwise.
fn expected_auto(s: &ScoringFunction, f: Forecast, d: &Distribution) -> Result<f64> {
    let method = if d.to_discrete().is_some() {
        ExpectationMethod::Closed
    } else {
        ExpectationMethod::Quadrature
    };
    Ok(expected_score(s, f, d, method)?.value)
}

/// `(1/T) sum S(forecast_t, y_t)`.
pub fn empirical_avg_score(
    s: &ScoringFunction,
    forecasts: &[Forecast],
    realised: &[f64],
) -> Result<f64> {
    check_len(forecasts.len(), realised.len())?;
    if forecasts.is_empty() {
        return Err(invalid("empty series"));
    }
    let vals = forecasts
        .iter()
        .zip(realised)
        .map(|(f, y)| score(s, *f, *y))
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean(&vals))
}

/// Coarse search grid `points` evenly spaced on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) || points < 3 {
            return Err(invalid(format!(
                "bad grid [{lo}, {hi}] with {points} points"
            )));
        }
        Ok(Self { lo, hi, points })
    }

    pub fn nodes(&self) -> Vec<f64> {
        let n = self.points - 1;
        (0..=n)
            .map(|k| self.lo + (self.hi - self.lo) * k as f64 / n as f64)
            .collect()
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }
}

/// Resolution of reported argmin endpoints.
pub const ARGMIN_RESOLUTION: f64 = 1e-6;

/// Argmin set of an expected score and the functional value read off it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Argmin {
    pub lower: f64,
    pub upper: f64,
    pub value: f64,
}

impl Argmin {
    /// The smallest minimiser.
    pub fn rho(&self) -> f64 {
        self.lower
    }
}

/// Grid search, golden-section refinement, then bisection for the edges
/// of the flat set `{x | E(x) <= min + tol}`.
pub fn minimize_expected_score(
    s: &ScoringFunction,
    d: &Distribution,
    grid: GridSpec,
) -> Result<Argmin> {
    if s.is_joint() {
        return Err(invalid("joint scores need minimize_joint_score"));
    }
    let obj = |x: f64| expected_auto(s, Forecast::Point(x), d);
    let nodes = grid.nodes();
    let vals = nodes
        .iter()
        .map(|x| obj(*x))
        .collect::<Result<Vec<f64>>>()?;
    let k = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("grid has points");
    let a = nodes[k.saturating_sub(1)];
    let b = nodes[(k + 1).min(nodes.len() - 1)];
    let cell = |x: f64| obj(x).unwrap_or(f64::INFINITY);
    let (mut x_star, mut f_star) = golden_section(cell, a, b, 1e-12);
    if vals[k] < f_star {
        x_star = nodes[k];
        f_star = vals[k];
    }
    let tol = 1e-14 * (1.0 + f_star.abs());
    let flat = |x: f64| cell(x) <= f_star + tol;
    if flat(grid.lo) {
        return Err(RiskError::BracketFailure { boundary: grid.lo });
    }
    if flat(grid.hi) {
        return Err(RiskError::BracketFailure { boundary: grid.hi });
    }
    let left_out = nodes
        .iter()
        .zip(&vals)
        .filter(|(x, v)| **x < x_star && **v > f_star + tol)
        .map(|(x, _)| *x)
        .fold(grid.lo, f64::max);
    let right_out = nodes
        .iter()
        .zip(&vals)
        .filter(|(x, v)| **x > x_star && **v > f_star + tol)
        .map(|(x, _)| *x)
        .fold(grid.hi, f64::min);
    let tol_x = 1e-3 * ARGMIN_RESOLUTION;
    let lower = bisect_predicate(left_out, x_star, tol_x, flat);
    // Largest flat point: smallest x beyond x_star that is not flat.
    let upper = bisect_predicate(x_star, right_out, tol_x, |x| !flat(x));
    let upper = if upper > x_star {
        upper - tol_x
    } else {
        x_star
    };
    let (lower, upper) = if upper - lower < 2.0 * ARGMIN_RESOLUTION {
        (x_star, x_star)
    } else {
        (lower, upper)
    };
    Ok(Argmin {
        lower,
        upper,
        value: f_star,
    })
}

/// Minimiser of the expected joint score over a box, refined by BFGS from
/// the best grid node.
pub fn minimize_joint_score(
    s: &ScoringFunction,
    d: &Distribution,
    var_grid: GridSpec,
    es_grid: GridSpec,
) -> Result<((f64, f64), f64)> {
    if !s.is_joint() {
        return Err(invalid("minimize_joint_score needs a joint score"));
    }
    let obj = |x1: f64, x2: f64| expected_auto(s, Forecast::Pair(x1, x2), d);
    let mut best = (f64::INFINITY, 0.0, 0.0, 0usize, 0usize);
    let xs = var_grid.nodes();
    let ys = es_grid.nodes();
    for (i, x1) in xs.iter().enumerate() {
        for (j, x2) in ys.iter().enumerate() {
            let v = obj(*x1, *x2)?;
            if v < best.0 {
                best = (v, *x1, *x2, i, j);
            }
        }
    }
    let (_, x1, x2, i, j) = best;
    if i == 0 || i == xs.len() - 1 {
        return Err(RiskError::BracketFailure { boundary: x1 });
    }
    if j == 0 || j == ys.len() - 1 {
        return Err(RiskError::BracketFailure { boundary: x2 });
    }
    let m = bfgs(
        |p: &[f64]| obj(p[0], p[1]).unwrap_or(f64::INFINITY),
        &[x1, x2],
        1e-9,
        200,
    );
    Ok(((m.x[0], m.x[1]), m.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DiscreteDistribution;

    fn two_point() -> Distribution {
        DiscreteDistribution::new(vec![1.0, 3.0], vec![0.5, 0.5])
            .unwrap()
            .into()
    }

    #[test]
    fn score_examples() {
        let q = ScoringFunction::quantile(0.5).unwrap();
        assert_eq!(score(&q, Forecast::Point(2.0), 2.0).unwrap(), 0.0);
        let q = ScoringFunction::quantile(0.9).unwrap();
        assert!((score(&q, Forecast::Point(1.0), 3.0).unwrap() - 1.8).abs() < 1e-15);
        assert_eq!(
            score(&ScoringFunction::SquaredError, Forecast::Point(1.0), 4.0).unwrap(),
            9.0
        );
        assert!(score(&q, Forecast::Pair(1.0, 2.0), 0.0).is_err());
    }

    #[test]
    fn joint_score_by_hand() {
        let s = ScoringFunction::joint_var_es(0.975, G2Preset::Exp).unwrap();
        let (x1, x2, y) = (0.5_f64, 0.9_f64, 1.2_f64);
        let want =
            (0.0 - 0.975) * (x1 - y) + (-x2).exp() * (y - x1) / 0.025 + (-x2).exp() * (x1 - x2)
                - (-x2).exp();
        assert!((score(&s, Forecast::Pair(x1, x2), y).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn logistic_antiderivative_is_stable() {
        assert!((G2Preset::Logistic.antiderivative(800.0) - 800.0).abs() < 1e-12);
        assert!(G2Preset::Logistic.antiderivative(-800.0) >= 0.0);
        assert!((G2Preset::Logistic.g2(0.0) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn bias_variance_identity() {
        let n: Distribution = ParametricDistribution::normal(1.0, 2.0).unwrap().into();
        let closed = expected_score(
            &ScoringFunction::SquaredError,
            Forecast::Point(3.0),
            &n,
            ExpectationMethod::Closed,
        )
        .unwrap();
        assert_eq!(closed.value, 8.0);
        let quad = expected_score(
            &ScoringFunction::SquaredError,
            Forecast::Point(3.0),
            &n,
            ExpectationMethod::Quadrature,
        )
        .unwrap();
        assert!((quad.value - 8.0).abs() < 1e-8);
    }

    #[test]
    fn pinball_on_two_points() {
        let q = ScoringFunction::quantile(0.5).unwrap();
        for m in [1.0, 2.0, 3.0] {
            let v = expected_score(
                &q,
                Forecast::Point(m),
                &two_point(),
                ExpectationMethod::Closed,
            )
            .unwrap();
            assert!((v.value - 0.5).abs() < 1e-15);
        }
        let a = minimize_expected_score(&q, &two_point(), GridSpec::new(0.0, 4.0, 401).unwrap())
            .unwrap();
        assert!(
            (a.lower - 1.0).abs() < 1e-6 && (a.upper - 3.0).abs() < 1e-6,
            "{a:?}"
        );
        assert!((a.rho() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn squared_and_absolute_minimisers() {
        let n: Distribution = ParametricDistribution::normal(2.0, 1.0).unwrap().into();
        let a = minimize_expected_score(
            &ScoringFunction::SquaredError,
            &n,
            GridSpec::new(-3.0, 7.0, 101).unwrap(),
        )
        .unwrap();
        assert!((a.rho() - 2.0).abs() < 1e-6, "{a:?}");
        let d: Distribution = DiscreteDistribution::new(vec![0.0, 10.0], vec![0.5, 0.5])
            .unwrap()
            .into();
        let a = minimize_expected_score(
            &ScoringFunction::AbsoluteError,
            &d,
            GridSpec::new(-1.0, 11.0, 121).unwrap(),
        )
        .unwrap();
        assert!(
            a.lower.abs() < 1e-6 && (a.upper - 10.0).abs() < 1e-6,
            "{a:?}"
        );
    }

    #[test]
    fn bracket_failure_at_edge() {
        let d = two_point();
        let r = minimize_expected_score(
            &ScoringFunction::SquaredError,
            &d,
            GridSpec::new(2.5, 5.0, 11).unwrap(),
        );
        assert!(matches!(r, Err(RiskError::BracketFailure { .. })));
    }

    #[test]
    fn heavy_tails_reject_squared_error() {
        let t: Distribution = ParametricDistribution::student_t(2.0, 0.0, 1.0)
            .unwrap()
            .into();
        let r = expected_score(
            &ScoringFunction::SquaredError,
            Forecast::Point(0.0),
            &t,
            ExpectationMethod::Quadrature,
        );
        assert!(matches!(r, Err(RiskError::NonIntegrableScore(_))));
    }

    #[test]
    fn averages() {
        let q = ScoringFunction::quantile(0.3).unwrap();
        let f = [Forecast::Point(1.0), Forecast::Point(2.0)];
        assert_eq!(empirical_avg_score(&q, &f, &[1.0, 2.0]).unwrap(), 0.0);
        let s = ScoringFunction::SquaredError;
        assert_eq!(empirical_avg_score(&s, &f, &[2.0, 4.0]).unwrap(), 2.5);
        assert!(empirical_avg_score(&s, &f, &[1.0]).is_err());
    }
}
