//! Exceedance backtests for VaR and score-based comparative backtests.

use std::fmt;
use std::fmt::Write as _;

use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF, Normal};

use crate::error::{check_len, invalid, Result};
use crate::numeric::mean;

/// Zone cut-offs on the binomial distribution function of the count.
pub const GREEN_LIMIT: f64 = 0.95;
pub const YELLOW_LIMIT: f64 = 0.9999;

/// Shortest series accepted by the comparative backtest.
pub const MIN_COMPARATIVE_LEN: usize = 30;

/// Indicators `1{L_t > VaR_t}` at level `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceedanceSeries {
    indicators: Vec<bool>,
    alpha: f64,
}

impl ExceedanceSeries {
    pub fn new(indicators: Vec<bool>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0,1), got {alpha}")));
        }
        if indicators.is_empty() {
            return Err(invalid("exceedance series is empty"));
        }
        Ok(Self { indicators, alpha })
    }

    /// A series with `n` exceedances placed first, then `t - n` non-exceedances.
    pub fn with_count(t: usize, n: usize, alpha: f64) -> Result<Self> {
        if n > t {
            return Err(invalid(format!("{n} exceedances out of {t} periods")));
        }
        Self::new((0..t).map(|i| i < n).collect(), alpha)
    }

    pub fn indicators(&self) -> &[bool] {
        &self.indicators
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.indicators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indicators.is_empty()
    }

    pub fn count(&self) -> usize {
        self.indicators.iter().filter(|b| **b).count()
    }

    pub fn rate(&self) -> f64 {
        self.count() as f64 / self.len() as f64
    }
}

/// Indicators of losses strictly above their VaR forecasts.
pub fn exceedances(losses: &[f64], var_forecasts: &[f64], alpha: f64) -> Result<ExceedanceSeries> {
    check_len(losses.len(), var_forecasts.len())?;
    let ind = losses
        .iter()
        .zip(var_forecasts)
        .map(|(l, v)| l > v)
        .collect();
    ExceedanceSeries::new(ind, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Zone {
    Green,
    Yellow,
    Red,
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Green => "green",
            Self::Yellow => "yellow",
            Self::Red => "red",
        })
    }
}

/// Outcome of one backtest.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestReport {
    pub test: String,
    pub statistic: f64,
    pub p_value: f64,
    pub zone: Option<Zone>,
    /// Set when the statistic could not be studentized.
    pub degenerate: bool,
}

impl BacktestReport {
    fn new(test: &str, statistic: f64, p_value: f64) -> Self {
        Self {
            test: test.to_string(),
            statistic,
            p_value: p_value.clamp(0.0, 1.0),
            zone: None,
            degenerate: false,
        }
    }

    /// Whether the null is rejected at test size `size`.
    pub fn rejects(&self, size: f64) -> bool {
        self.p_value < size
    }

    /// `test=<name> stat=<v> p=<v> zone=<z>`.
    pub fn to_line(&self) -> String {
        let zone = self.zone.map_or_else(|| "-".to_string(), |z| z.to_string());
        format!(
            "test={} stat={} p={} zone={}",
            self.test, self.statistic, self.p_value, zone
        )
    }
}

impl fmt::Display for BacktestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

/// CSV with header `test,stat,p,zone,reject` at size `size`.
pub fn reports_to_csv(reports: &[BacktestReport], size: f64) -> String {
    let mut out = String::from("test,stat,p,zone,reject\n");
    for r in reports {
        let zone = r.zone.map_or_else(String::new, |z| z.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.test,
            r.statistic,
            r.p_value,
            zone,
            r.rejects(size)
        );
    }
    out
}

/// `a ln b` with `0 ln 0 = 0`.
fn xlogy(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * b.ln()
    }
}

fn chi2_sf(x: f64, dof: f64) -> f64 {
    let chi = ChiSquared::new(dof).expect("positive degrees of freedom");
    chi.sf(x.max(0.0))
}

fn pof_statistic(t: f64, n: f64, p: f64) -> f64 {
    let null = xlogy(t - n, 1.0 - p) + xlogy(n, p);
    let alt = xlogy(t - n, 1.0 - n / t) + xlogy(n, n / t);
    (2.0 * (alt - null)).max(0.0)
}

/// Proportion-of-failures likelihood ratio against `p = 1 - alpha`.
pub fn kupiec_pof(e: &ExceedanceSeries) -> BacktestReport {
    let lr = pof_statistic(e.len() as f64, e.count() as f64, 1.0 - e.alpha);
    BacktestReport::new("kupiec", lr, chi2_sf(lr, 1.0))
}

fn binomial(e: &ExceedanceSeries) -> Binomial {
    Binomial::new(1.0 - e.alpha, e.len() as u64).expect("valid binomial")
}

/// `P(N <= n)` under `Binomial(T, 1 - alpha)`.
pub fn binomial_cdf(t: usize, n: usize, alpha: f64) -> f64 {
    Binomial::new(1.0 - alpha, t as u64)
        .expect("valid binomial")
        .cdf(n as u64)
}

/// Zone from the binomial distribution function at the observed count. The
/// p-value is `P(N >= observed)`.
pub fn traffic_light(e: &ExceedanceSeries) -> BacktestReport {
    let n = e.count() as u64;
    let b = binomial(e);
    let cdf = b.cdf(n);
    let zone = if cdf < GREEN_LIMIT {
        Zone::Green
    } else if cdf < YELLOW_LIMIT {
        Zone::Yellow
    } else {
        Zone::Red
    };
    let p = if n == 0 { 1.0 } else { b.sf(n - 1) };
    let mut r = BacktestReport::new("traffic_light", n as f64, p);
    r.zone = Some(zone);
    r
}

/// Transition counts `[n00, n01, n10, n11]`.
pub fn transition_counts(e: &ExceedanceSeries) -> [usize; 4] {
    let mut c = [0usize; 4];
    for w in e.indicators.windows(2) {
        c[2 * usize::from(w[0]) + usize::from(w[1])] += 1;
    }
    c
}

fn independence_statistic(e: &ExceedanceSeries) -> f64 {
    let [n00, n01, n10, n11] = transition_counts(e).map(|v| v as f64);
    let pi01 = if n00 + n01 > 0.0 {
        n01 / (n00 + n01)
    } else {
        0.0
    };
    let pi11 = if n10 + n11 > 0.0 {
        n11 / (n10 + n11)
    } else {
        0.0
    };
    let pi = (n01 + n11) / (n00 + n01 + n10 + n11);
    let null = xlogy(n00 + n10, 1.0 - pi) + xlogy(n01 + n11, pi);
    let alt = xlogy(n00, 1.0 - pi01) + xlogy(n01, pi01) + xlogy(n10, 1.0 - pi11) + xlogy(n11, pi11);
    (2.0 * (alt - null)).max(0.0)
}

/// First-order Markov independence test.
pub fn christoffersen_independence(e: &ExceedanceSeries) -> Result<BacktestReport> {
    if e.len() < 2 {
        return Err(invalid("independence test needs at least two periods"));
    }
    let lr = independence_statistic(e);
    Ok(BacktestReport::new(
        "christoffersen_ind",
        lr,
        chi2_sf(lr, 1.0),
    ))
}

/// Conditional coverage: POF plus independence, two degrees of freedom.
pub fn christoffersen_cc(e: &ExceedanceSeries) -> Result<BacktestReport> {
    let ind = christoffersen_independence(e)?;
    let lr = kupiec_pof(e).statistic + ind.statistic;
    Ok(BacktestReport::new(
        "christoffersen_cc",
        lr,
        chi2_sf(lr, 2.0),
    ))
}

/// Null hypothesis of the comparative backtest, on `d = model - benchmark`
/// with lower scores better.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// `E d >= 0`; rejecting it accepts the model.
    ModelWorse,
    /// `E d <= 0`; rejecting it flags the model.
    ModelBetter,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ModelWorse => "model_worse",
            Self::ModelBetter => "model_better",
        })
    }
}

impl std::str::FromStr for Hypothesis {
    type Err = crate::error::RiskError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "model_worse" | "model-worse" | "minus" | "h0-" => Ok(Self::ModelWorse),
            "model_better" | "model-better" | "plus" | "h0+" => Ok(Self::ModelBetter),
            other => Err(crate::error::RiskError::Parse(format!(
                "unknown hypothesis `{other}`"
            ))),
        }
    }
}

/// Bartlett-weighted long-run variance with window `floor(T^(1/3))`.
pub fn long_run_variance(d: &[f64]) -> f64 {
    let t = d.len();
    let m = mean(d);
    let window = (t as f64).cbrt().floor() as usize;
    let gamma = |lag: usize| -> f64 {
        d[lag..]
            .iter()
            .zip(d)
            .map(|(a, b)| (a - m) * (b - m))
            .sum::<f64>()
            / t as f64
    };
    let mut v = gamma(0);
    for lag in 1..=window.min(t - 1) {
        v += 2.0 * (1.0 - lag as f64 / (window as f64 + 1.0)) * gamma(lag);
    }
    v
}

/// Studentized mean score difference with a one-sided normal p-value.
pub fn comparative_score_backtest(
    model: &[f64],
    benchmark: &[f64],
    side: Hypothesis,
) -> Result<BacktestReport> {
    check_len(model.len(), benchmark.len())?;
    if model.len() < MIN_COMPARATIVE_LEN {
        return Err(invalid(format!(
            "comparative backtest needs at least {MIN_COMPARATIVE_LEN} periods, got {}",
            model.len()
        )));
    }
    let d: Vec<f64> = model.iter().zip(benchmark).map(|(a, b)| a - b).collect();
    let dbar = mean(&d);
    let v = long_run_variance(&d);
    let name = format!("comparative_{side}");
    let scale = 1e-14 * (1.0 + d.iter().map(|x| x * x).sum::<f64>() / d.len() as f64);
    if !(v > scale) {
        let stat = if dbar == 0.0 {
            0.0
        } else {
            dbar.signum() * f64::INFINITY
        };
        let p = match side {
            Hypothesis::ModelWorse if dbar < 0.0 => 0.0,
            Hypothesis::ModelBetter if dbar > 0.0 => 0.0,
            _ => 1.0,
        };
        let mut r = BacktestReport::new(&name, stat, p);
        r.degenerate = true;
        return Ok(r);
    }
    let stat = dbar / (v / d.len() as f64).sqrt();
    let phi = Normal::standard().cdf(stat);
    let p = match side {
        Hypothesis::ModelWorse => phi,
        Hypothesis::ModelBetter => Normal::standard().sf(stat),
    };
    Ok(BacktestReport::new(&name, stat, p))
}
