//! IGARCH(1,1) filtering and fitting, and one-day MS/ES forecasts of a
//! position under Gaussian or Student-t innovations.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal, StudentT};
use statrs::function::gamma::ln_gamma;

use crate::dist::{DiscreteDistribution, Distribution, ParametricDistribution};
use crate::error::{invalid, Result, RiskError};
use crate::measures;
use crate::numeric::{bfgs, mean};

/// Returns needed before fitting.
pub const MIN_FIT_LEN: usize = 250;

/// Returns used for the initial variance.
pub const INIT_WINDOW: usize = 50;

/// Conditional law of `epsilon_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Innovation {
    Gaussian,
    /// Raw `t_nu`, or scaled to unit variance when `standardized`.
    StudentT {
        nu: f64,
        standardized: bool,
    },
}

impl Innovation {
    fn check(&self) -> Result<()> {
        if let Self::StudentT { nu, .. } = self {
            if !(nu.is_finite() && *nu > 2.0) {
                return Err(invalid(format!(
                    "degrees of freedom must exceed 2, got {nu}"
                )));
            }
        }
        Ok(())
    }

    /// Multiplier turning a raw `t_nu` draw into the model innovation.
    fn t_factor(nu: f64, standardized: bool) -> f64 {
        if standardized {
            ((nu - 2.0) / nu).sqrt()
        } else {
            1.0
        }
    }

    fn log_density(&self, e: f64) -> f64 {
        match *self {
            Self::Gaussian => -0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * e * e,
            Self::StudentT { nu, standardized } => {
                let k = Self::t_factor(nu, standardized);
                let z = e / k;
                ln_gamma((nu + 1.0) / 2.0)
                    - ln_gamma(nu / 2.0)
                    - 0.5 * (nu * std::f64::consts::PI).ln()
                    - (nu + 1.0) / 2.0 * (z * z / nu).ln_1p()
                    - k.ln()
            }
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Gaussian => rng.sample(StandardNormal),
            Self::StudentT { nu, standardized } => {
                let t = StudentT::new(nu).expect("validated degrees of freedom");
                t.sample(rng) * Self::t_factor(nu, standardized)
            }
        }
    }
}

/// `r_t = mu + sigma_t eps_t`, `sigma_t^2 = beta sigma_{t-1}^2 + (1 - beta) r_{t-1}^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IgarchModel {
    pub mu: f64,
    pub beta: f64,
    pub innovation: Innovation,
    pub sigma0_sq: f64,
}

impl IgarchModel {
    pub fn new(mu: f64, beta: f64, innovation: Innovation, sigma0_sq: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(invalid("mu must be finite"));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(invalid(format!("beta must lie in (0,1), got {beta}")));
        }
        if !(sigma0_sq.is_finite() && sigma0_sq > 0.0) {
            return Err(invalid(format!(
                "initial variance must be positive, got {sigma0_sq}"
            )));
        }
        innovation.check()?;
        Ok(Self {
            mu,
            beta,
            innovation,
            sigma0_sq,
        })
    }
}

/// Conditional variances `sigma_0^2 .. sigma_n^2`; the last entry is the
/// next-day forecast.
pub fn filter_volatility(m: &IgarchModel, returns: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(returns.len() + 1);
    let mut s2 = m.sigma0_sq;
    out.push(s2);
    for r in returns {
        s2 = m.beta * s2 + (1.0 - m.beta) * r * r;
        out.push(s2);
    }
    out
}

/// Conditional log-likelihood given `sigma_0^2`.
pub fn log_likelihood(m: &IgarchModel, returns: &[f64]) -> f64 {
    let var = filter_volatility(m, returns);
    returns
        .iter()
        .zip(&var)
        .map(|(r, s2)| {
            let s = s2.sqrt();
            m.innovation.log_density((r - m.mu) / s) - s.ln()
        })
        .sum()
}

/// `n` returns from the model, seeded.
pub fn simulate(m: &IgarchModel, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s2 = m.sigma0_sq;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let r = m.mu + s2.sqrt() * m.innovation.draw(&mut rng);
        out.push(r);
        s2 = m.beta * s2 + (1.0 - m.beta) * r * r;
    }
    out
}

/// Which innovation family to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    StudentT { standardized: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedModel {
    pub model: IgarchModel,
    pub log_likelihood: f64,
    pub iterations: usize,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Maximum conditional likelihood over `(mu, beta[, nu])` by BFGS on
/// `((mu - m_w) / s_w, logit beta[, ln(nu - 2)])`, best of three starts.
/// `m_w` and `s_w` are the precision-weighted mean and harmonic volatility
/// under a pilot filter; filtered volatility can shrink by orders of
/// magnitude along a series, so the raw sample scale is far too coarse for `mu`.
pub fn fit_igarch(returns: &[f64], family: Family) -> Result<FittedModel> {
    if returns.len() < MIN_FIT_LEN {
        return Err(invalid(format!(
            "fitting needs at least {MIN_FIT_LEN} returns, got {}",
            returns.len()
        )));
    }
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(invalid("returns must be finite"));
    }
    let sigma0_sq = sample_variance(&returns[..INIT_WINDOW]);
    if !(sigma0_sq > 0.0 && sample_variance(returns) > 0.0) {
        return Err(RiskError::DegenerateSeries(
            "returns have zero variance".into(),
        ));
    }
    let n = returns.len() as f64;
    let pilot = IgarchModel::new(0.0, 0.94, Innovation::Gaussian, sigma0_sq)?;
    let precision: Vec<f64> = filter_volatility(&pilot, returns)[..returns.len()]
        .iter()
        .map(|s2| 1.0 / s2)
        .collect();
    if precision.iter().any(|w| !w.is_finite()) {
        return Err(RiskError::DegenerateSeries(
            "filtered variance underflows".into(),
        ));
    }
    let total: f64 = precision.iter().sum();
    let centre = returns
        .iter()
        .zip(&precision)
        .map(|(r, w)| r * w)
        .sum::<f64>()
        / total;
    let sd = (n / total).sqrt();
    let build = |x: &[f64]| -> Option<IgarchModel> {
        let innovation = match family {
            Family::Gaussian => Innovation::Gaussian,
            Family::StudentT { standardized } => Innovation::StudentT {
                nu: 2.0 + x[2].exp(),
                standardized,
            },
        };
        IgarchModel::new(centre + x[0] * sd, logistic(x[1]), innovation, sigma0_sq).ok()
    };
    let objective = |x: &[f64]| -> f64 {
        if x.iter().any(|v| !v.is_finite())
            || x[1].abs() > 30.0
            || x.get(2).is_some_and(|v| *v > 12.0)
        {
            return f64::INFINITY;
        }
        build(x).map_or(f64::INFINITY, |m| -log_likelihood(&m, returns) / n)
    };
    let starts: [(f64, f64); 3] = [(0.94, 6.0), (0.85, 4.0), (0.98, 12.0)];
    let mut best: Option<(Vec<f64>, f64, usize, bool)> = None;
    for (beta0, nu0) in starts {
        let mut x0 = vec![0.0, (beta0 / (1.0 - beta0)).ln()];
        if matches!(family, Family::StudentT { .. }) {
            x0.push((nu0 - 2.0_f64).ln());
        }
        let m = bfgs(objective, &x0, 1e-7, 500);
        let better = best.as_ref().is_none_or(|b| m.value < b.1);
        if m.value.is_finite() && better {
            best = Some((m.x, m.value, m.iterations, m.converged));
        }
    }
    let (x, value, iterations, converged) =
        best.ok_or_else(|| RiskError::Convergence("no start produced a finite likelihood".into()))?;
    let model = build(&x).expect("finite optimum maps to a valid model");
    if !converged {
        return Err(RiskError::Convergence(format!(
            "optimizer did not converge after restarts; best point {model:?} with log-likelihood {}",
            -value * n
        )));
    }
    Ok(FittedModel {
        model,
        log_likelihood: log_likelihood(&model, returns),
        iterations,
    })
}

/// Law of the loss `-notional * r_next`.
pub fn predictive_loss(m: &IgarchModel, sigma_next_sq: f64, notional: f64) -> Result<Distribution> {
    if !(notional.is_finite() && notional > 0.0) {
        return Err(invalid(format!(
            "notional must be positive, got {notional}"
        )));
    }
    if !(sigma_next_sq.is_finite() && sigma_next_sq >= 0.0) {
        return Err(invalid(format!(
            "variance must be non-negative, got {sigma_next_sq}"
        )));
    }
    let loc = -notional * m.mu;
    let scale = notional * sigma_next_sq.sqrt();
    if scale == 0.0 {
        return Ok(DiscreteDistribution::point_mass(loc)?.into());
    }
    Ok(match m.innovation {
        Innovation::Gaussian => ParametricDistribution::normal(loc, scale)?,
        Innovation::StudentT { nu, standardized } => ParametricDistribution::student_t(
            nu,
            loc,
            scale * Innovation::t_factor(nu, standardized),
        )?,
    }
    .into())
}

/// One-day MS and ES at one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailForecast {
    pub alpha: f64,
    pub ms: f64,
    pub es: f64,
}

pub fn forecast_tail_risk(
    m: &IgarchModel,
    sigma_next_sq: f64,
    notional: f64,
    alphas: &[f64],
) -> Result<Vec<TailForecast>> {
    let law = predictive_loss(m, sigma_next_sq, notional)?;
    alphas
        .iter()
        .map(|&alpha| {
            Ok(TailForecast {
                alpha,
                ms: measures::ms(&law, alpha)?,
                es: measures::es(&law, alpha)?,
            })
        })
        .collect()
}

/// One row of the two-model comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastRow {
    pub alpha: f64,
    pub es1: f64,
    pub es2: f64,
    pub es_diff: f64,
    pub ms1: f64,
    pub ms2: f64,
    pub ms_diff: f64,
    /// `es_diff / ms_diff - 1`.
    pub ratio: f64,
}

impl ForecastRow {
    pub fn new(alpha: f64, es1: f64, es2: f64, ms1: f64, ms2: f64) -> Self {
        let es_diff = es2 - es1;
        let ms_diff = ms2 - ms1;
        Self {
            alpha,
            es1,
            es2,
            es_diff,
            ms1,
            ms2,
            ms_diff,
            ratio: es_diff / ms_diff - 1.0,
        }
    }
}

/// Both fits, with rows per level.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelComparison {
    pub gaussian: FittedModel,
    pub student: FittedModel,
    pub rows: Vec<ForecastRow>,
}

/// Fits the Gaussian and Student-t models, then forecasts each at every level.
pub fn model_comparison_table(
    returns: &[f64],
    notional: f64,
    alphas: &[f64],
    standardized: bool,
) -> Result<ModelComparison> {
    if alphas.is_empty() {
        return Err(invalid("need at least one level"));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(invalid(format!("level {a} outside (0,1)")));
    }
    let gaussian = fit_igarch(returns, Family::Gaussian)?;
    let student = fit_igarch(returns, Family::StudentT { standardized })?;
    let next = |f: &FittedModel| {
        *filter_volatility(&f.model, returns)
            .last()
            .expect("non-empty")
    };
    let f1 = forecast_tail_risk(&gaussian.model, next(&gaussian), notional, alphas)?;
    let f2 = forecast_tail_risk(&student.model, next(&student), notional, alphas)?;
    let rows = f1
        .iter()
        .zip(&f2)
        .map(|(a, b)| ForecastRow::new(a.alpha, a.es, b.es, a.ms, b.ms))
        .collect();
    Ok(ModelComparison {
        gaussian,
        student,
        rows,
    })
}

/// CSV with one row per level: both ES, both MS, their differences and the ratio.
pub fn comparison_to_csv(rows: &[ForecastRow]) -> String {
    let mut out = String::from("alpha,es1,es2,es_diff,ms1,ms2,ms_diff,ratio\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.alpha, r.es1, r.es2, r.es_diff, r.ms1, r.ms2, r.ms_diff, r.ratio
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(beta: f64) -> IgarchModel {
        IgarchModel::new(0.0, beta, Innovation::Gaussian, 1.0).unwrap()
    }

    #[test]
    fn one_step() {
        let v = filter_volatility(&gaussian(0.94), &[0.02]);
        assert_eq!(v.len(), 2);
        assert!((v[1] - 0.940024).abs() < 1e-15);
    }

    #[test]
    fn geometric_decay() {
        let v = filter_volatility(&gaussian(0.9), &[0.0; 10]);
        for (t, s2) in v.iter().enumerate() {
            assert!((s2 - 0.9f64.powi(t as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_returns_fixed_point() {
        let v = filter_volatility(&gaussian(0.94), &[0.5; 500]);
        assert!((v[500] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn validation() {
        assert!(IgarchModel::new(0.0, 1.0, Innovation::Gaussian, 1.0).is_err());
        assert!(IgarchModel::new(0.0, 0.9, Innovation::Gaussian, 0.0).is_err());
        let t = Innovation::StudentT {
            nu: 2.0,
            standardized: false,
        };
        assert!(IgarchModel::new(0.0, 0.9, t, 1.0).is_err());
        assert!(fit_igarch(&[0.0; 300], Family::Gaussian).is_err());
        assert!(matches!(
            fit_igarch(&[0.0; 300], Family::Gaussian),
            Err(RiskError::DegenerateSeries(_))
        ));
        assert!(fit_igarch(&[0.01; 100], Family::Gaussian).is_err());
    }

    #[test]
    fn t_density_integrates_to_one() {
        for standardized in [false, true] {
            let inn = Innovation::StudentT {
                nu: 5.0,
                standardized,
            };
            let h = 1e-3;
            let total: f64 = (-200_000..200_000)
                .map(|k| inn.log_density(f64::from(k) * h).exp() * h)
                .sum();
            assert!((total - 1.0).abs() < 1e-3, "{total}");
        }
    }

    #[test]
    fn degenerate_variance_collapses() {
        let m = IgarchModel::new(0.001, 0.94, Innovation::Gaussian, 1.0).unwrap();
        let f = forecast_tail_risk(&m, 0.0, 1e6, &[0.99]).unwrap();
        assert!((f[0].ms + 1000.0).abs() < 1e-9 && (f[0].es + 1000.0).abs() < 1e-9);
    }

    #[test]
    fn ratio_column() {
        let r = ForecastRow::new(0.975, 20586.0, 22690.0, 19715.0, 20826.0);
        assert_eq!(r.es_diff, 2104.0);
        assert_eq!(r.ms_diff, 1111.0);
        assert!((r.ratio - 0.893).abs() < 1e-3);
    }
}
