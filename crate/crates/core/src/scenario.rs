//! Scenario aggregation `s * max_w sum w_i x_i` and the Basel capital rules
//! written as instances of it.

use std::path::{Path, PathBuf};

use crate::dist::{Distribution, EmpiricalDistribution, ParametricDistribution};
use crate::error::{check_len, invalid, Result, RiskError};
use crate::io::read_series;
use crate::measures::RiskMeasureSpec;

/// Tolerance on the unit sum of each prior.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Length of the Basel averaging window.
pub const BASEL_WINDOW: usize = 60;

/// Default multiplier of the ES-based rule.
pub const DEFAULT_BASEL35_MULTIPLIER: f64 = 3.0;

/// A finite set of priors on the scenario simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSet {
    weights: Vec<Vec<f64>>,
}

impl PriorSet {
    pub fn new(weights: Vec<Vec<f64>>) -> Result<Self> {
        let m = weights
            .first()
            .map(Vec::len)
            .ok_or_else(|| invalid("a prior set needs at least one weight vector"))?;
        if m == 0 {
            return Err(invalid("weight vectors must be non-empty"));
        }
        for (i, w) in weights.iter().enumerate() {
            check_len(m, w.len())?;
            if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(invalid(format!(
                    "prior {i} has a negative or non-finite weight"
                )));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > SIMPLEX_TOL {
                return Err(invalid(format!("prior {i} sums to {total}, expected 1")));
            }
        }
        Ok(Self { weights })
    }

    pub fn single(w: Vec<f64>) -> Result<Self> {
        Self::new(vec![w])
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn scenarios(&self) -> usize {
        self.weights[0].len()
    }
}

/// Per-scenario risk values and the scale `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRiskInput {
    values: Vec<f64>,
    scale: f64,
}

impl ScenarioRiskInput {
    pub fn new(values: Vec<f64>, scale: f64) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("scenario values must be finite and non-empty"));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(invalid(format!("scale must be positive, got {scale}")));
        }
        Ok(Self { values, scale })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// `s * max_{w in W} sum_i w_i x_i`.
pub fn aggregate(x: &ScenarioRiskInput, priors: &PriorSet) -> Result<f64> {
    check_len(priors.scenarios(), x.values.len())?;
    let best = priors
        .weights
        .iter()
        .map(|w| w.iter().zip(&x.values).map(|(a, b)| a * b).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(x.scale * best)
}

fn check_history(history: &[f64]) -> Result<()> {
    if history.len() != BASEL_WINDOW {
        return Err(invalid(format!(
            "history must hold {BASEL_WINDOW} values, got {}",
            history.len()
        )));
    }
    if history.iter().any(|v| !v.is_finite()) {
        return Err(invalid("history values must be finite"));
    }
    Ok(())
}

fn window_charge(today: f64, history: &[f64], s: f64) -> Result<f64> {
    check_history(history)?;
    if !today.is_finite() {
        return Err(invalid("today's value must be finite"));
    }
    let avg = history.iter().sum::<f64>() / BASEL_WINDOW as f64;
    Ok(today.max(s * avg))
}

/// `max(VaR_today, s * mean(last 60 VaRs))` with `s >= 3`.
pub fn basel2_charge(var_today: f64, var_history: &[f64], s: f64) -> Result<f64> {
    if !(s >= 3.0 && s.is_finite()) {
        return Err(invalid(format!("multiplier must be at least 3, got {s}")));
    }
    window_charge(var_today, var_history, s)
}

/// Sum of the VaR and stressed-VaR rules, each with its own multiplier.
pub fn basel25_charge(
    var_today: f64,
    var_history: &[f64],
    svar_today: f64,
    svar_history: &[f64],
    s: f64,
    s_stressed: f64,
) -> Result<f64> {
    Ok(basel2_charge(var_today, var_history, s)?
        + basel2_charge(svar_today, svar_history, s_stressed)?)
}

/// `max(ES_today, s * mean(last 60 ES values))`. Feeding MS values gives
/// the median-shortfall variant.
pub fn basel35_charge(es_today: f64, es_history: &[f64], s: f64) -> Result<f64> {
    if !(s.is_finite() && s > 0.0) {
        return Err(invalid(format!("multiplier must be positive, got {s}")));
    }
    window_charge(es_today, es_history, s)
}

/// The window rule as an aggregation over `(today, history..., 0)` with two
/// priors: weight `1/s` on today and `1 - 1/s` on the zero scenario, or the
/// uniform average of the history.
pub fn window_rule_as_aggregate(
    today: f64,
    history: &[f64],
    s: f64,
) -> Result<(ScenarioRiskInput, PriorSet)> {
    check_history(history)?;
    if !(s >= 1.0 && s.is_finite()) {
        return Err(invalid(format!("multiplier must be at least 1, got {s}")));
    }
    let m = BASEL_WINDOW + 2;
    let mut x = Vec::with_capacity(m);
    x.push(today);
    x.extend_from_slice(history);
    x.push(0.0);
    let mut today_prior = vec![0.0; m];
    today_prior[0] = 1.0 / s;
    today_prior[m - 1] = 1.0 - 1.0 / s;
    let mut avg_prior = vec![0.0; m];
    for w in &mut avg_prior[1..=BASEL_WINDOW] {
        *w = 1.0 / BASEL_WINDOW as f64;
    }
    Ok((
        ScenarioRiskInput::new(x, s)?,
        PriorSet::new(vec![today_prior, avg_prior])?,
    ))
}

/// Where a scenario's risk value comes from.
#[derive(Debug, Clone)]
pub enum ScenarioSource {
    Value(f64),
    Measure {
        spec: RiskMeasureSpec,
        law: LawSource,
    },
}

#[derive(Debug, Clone)]
pub enum LawSource {
    Parametric(ParametricDistribution),
    /// Empirical law of the losses in a series file.
    Data(PathBuf),
}

impl LawSource {
    pub fn load(&self) -> Result<Distribution> {
        match self {
            Self::Parametric(p) => Ok(p.clone().into()),
            Self::Data(path) => {
                let series = read_series(path)?;
                Ok(EmpiricalDistribution::new(&series.losses()?)?.into())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub label: String,
    pub source: ScenarioSource,
}

/// Parsed scenario file.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub scale: f64,
    pub scenarios: Vec<Scenario>,
    pub priors: PriorSet,
}

impl ScenarioConfig {
    pub fn risk_input(&self) -> Result<ScenarioRiskInput> {
        let values = self
            .scenarios
            .iter()
            .map(|s| match &s.source {
                ScenarioSource::Value(v) => Ok(*v),
                ScenarioSource::Measure { spec, law } => spec.evaluate(&law.load()?),
            })
            .collect::<Result<Vec<f64>>>()?;
        ScenarioRiskInput::new(values, self.scale)
    }

    pub fn evaluate(&self) -> Result<f64> {
        aggregate(&self.risk_input()?, &self.priors)
    }
}

fn line_err(line: usize, msg: impl std::fmt::Display) -> RiskError {
    RiskError::Parse(format!("line {line}: {msg}"))
}

/// Parses a scenario file. Data paths resolve against `base_dir`.
///
/// ```text
/// scale = 1
/// scenario base    es@0.975  normal:mu=0,sigma=1
/// scenario stress  ms@0.99   data:stress.csv
/// scenario fixed   value=2.5
/// prior 0.5 0.5 0
/// prior 0 0 1
/// ```
pub fn parse_scenario_config(text: &str, base_dir: &Path) -> Result<ScenarioConfig> {
    let mut scale = 1.0;
    let mut scenarios: Vec<Scenario> = Vec::new();
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some((key, value)) = body.split_once('=').filter(|(k, _)| k.trim() == "scale") {
            let _ = key;
            scale = value
                .trim()
                .parse()
                .ok()
                .filter(|s: &f64| s.is_finite() && *s > 0.0)
                .ok_or_else(|| {
                    line_err(
                        line,
                        format!("scale `{}` is not a positive number", value.trim()),
                    )
                })?;
            continue;
        }
        let mut tokens = body.split_whitespace();
        match tokens.next() {
            Some("scenario") => {
                let label = tokens
                    .next()
                    .ok_or_else(|| line_err(line, "scenario needs a label"))?;
                if scenarios.iter().any(|s| s.label == label) {
                    return Err(line_err(line, format!("duplicate scenario `{label}`")));
                }
                let first = tokens
                    .next()
                    .ok_or_else(|| line_err(line, "scenario needs a spec or value"))?;
                let source = if let Some(v) = first.strip_prefix("value=") {
                    let v: f64 = v
                        .parse()
                        .ok()
                        .filter(|x: &f64| x.is_finite())
                        .ok_or_else(|| line_err(line, format!("value `{v}` is not a number")))?;
                    ScenarioSource::Value(v)
                } else {
                    let spec: RiskMeasureSpec = first.parse().map_err(|e| line_err(line, e))?;
                    let law = tokens
                        .next()
                        .ok_or_else(|| line_err(line, "scenario needs a law"))?;
                    let law = match law.strip_prefix("data:") {
                        Some(path) => LawSource::Data(base_dir.join(path)),
                        None => LawSource::Parametric(law.parse().map_err(|e| line_err(line, e))?),
                    };
                    ScenarioSource::Measure { spec, law }
                };
                if let Some(extra) = tokens.next() {
                    return Err(line_err(line, format!("unexpected token `{extra}`")));
                }
                scenarios.push(Scenario {
                    label: label.to_string(),
                    source,
                });
            }
            Some("prior") => {
                let row = tokens
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| line_err(line, format!("weight `{t}` is not a number")))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                rows.push((line, row));
            }
            Some(other) => return Err(line_err(line, format!("unknown directive `{other}`"))),
            None => {}
        }
    }
    if scenarios.is_empty() {
        return Err(RiskError::Parse("no scenarios declared".into()));
    }
    if rows.is_empty() {
        return Err(RiskError::Parse("no prior rows declared".into()));
    }
    for (line, row) in &rows {
        if row.len() != scenarios.len() {
            return Err(line_err(
                *line,
                format!(
                    "prior has {} weights for {} scenarios",
                    row.len(),
                    scenarios.len()
                ),
            ));
        }
        PriorSet::single(row.clone()).map_err(|e| line_err(*line, e))?;
    }
    let priors = PriorSet::new(rows.into_iter().map(|(_, r)| r).collect())?;
    Ok(ScenarioConfig {
        scale,
        scenarios,
        priors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sup_of_selected_coordinates() {
        let x = ScenarioRiskInput::new(vec![1.0, 2.0, 3.0], 1.0).unwrap();
        let w = PriorSet::new(vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(aggregate(&x, &w).unwrap(), 3.0);
        let single = PriorSet::single(vec![0.25, 0.25, 0.5]).unwrap();
        assert_eq!(aggregate(&x, &single).unwrap(), 2.25);
        let short = PriorSet::single(vec![0.5, 0.5]).unwrap();
        assert!(aggregate(&x, &short).is_err());
    }

    #[test]
    fn priors_on_simplex() {
        assert!(PriorSet::new(vec![]).is_err());
        assert!(PriorSet::single(vec![0.5, 0.6]).is_err());
        assert!(PriorSet::single(vec![1.5, -0.5]).is_err());
        assert!(PriorSet::new(vec![vec![1.0], vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn basel_examples() {
        let h = [2.0; 60];
        assert_eq!(basel2_charge(10.0, &h, 3.0).unwrap(), 10.0);
        assert_eq!(basel2_charge(1.0, &h, 3.0).unwrap(), 6.0);
        assert!(basel2_charge(1.0, &h[..59], 3.0).is_err());
        assert!(basel2_charge(1.0, &h, 2.5).is_err());
        assert_eq!(basel35_charge(10.0, &h, 3.0).unwrap(), 10.0);
        assert_eq!(basel35_charge(1.0, &h, 3.0).unwrap(), 6.0);
        let z = [0.0; 60];
        assert_eq!(basel25_charge(1.0, &h, 0.0, &z, 3.0, 3.0).unwrap(), 6.0);
        assert_eq!(basel25_charge(1.0, &h, 1.0, &h, 3.0, 3.0).unwrap(), 12.0);
        assert_eq!(
            basel25_charge(10.0, &h, 1.0, &[1.0; 60], 3.0, 4.0).unwrap(),
            14.0
        );
    }

    #[test]
    fn parses_config() {
        let text = "# demo\nscale = 2\nscenario a value=1\nscenario b var@0.5 normal:mu=3,sigma=1 # median 3\nprior 1 0\nprior 0.5 0.5\n";
        let cfg = parse_scenario_config(text, Path::new(".")).unwrap();
        assert_eq!(cfg.scenarios.len(), 2);
        assert!((cfg.evaluate().unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn config_errors_name_the_line() {
        let cases = [
            ("scenario a value=1\nprior 0.5\n", "line 2"),
            ("scenario a value=1\nprior 0.7\n", "line 2"),
            ("scenario a foo@1 normal\nprior 1\n", "line 1"),
            ("scenario a value=1\nbogus\nprior 1\n", "line 2"),
            ("scale = -1\n", "line 1"),
        ];
        for (text, want) in cases {
            let err = parse_scenario_config(text, Path::new("."))
                .unwrap_err()
                .to_string();
            assert!(err.contains(want), "{text:?}: {err}");
        }
    }
}
