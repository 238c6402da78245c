use std::fmt::Write as _;
use std::path::Path;

use tailrisk::backtest::{
    christoffersen_cc, christoffersen_independence, comparative_score_backtest, exceedances,
    kupiec_pof, reports_to_csv, traffic_light, ExceedanceSeries,
};
use tailrisk::dist::{Distribution, EmpiricalDistribution};
use tailrisk::elicit::{
    counterexample_curves, counterexample_monte_carlo, score, search_cls_violation, Forecast,
    ScoringFunction,
};
use tailrisk::error::RiskError;
use tailrisk::forecast::model_comparison_table;
use tailrisk::io::{read_series, Series};
use tailrisk::measures::RiskMeasureSpec;
use tailrisk::scenario::parse_scenario_config;

use crate::args::*;
use crate::CliError;

pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Measure(a) => measure(a),
        Command::Backtest { test } => backtest(test),
        Command::Aggregate(a) => aggregate(a),
        Command::Forecast(a) => forecast(a),
        Command::Counterexample(a) => counterexample(a, cli.seed),
        Command::ClsCheck(a) => cls_check(a, cli.seed),
    }
}

fn load_series(path: &Path) -> Result<Series, CliError> {
    read_series(path).map_err(|e| match e {
        RiskError::Io(_) => CliError::Config(e.to_string()),
        _ => CliError::Config(format!("{}: {e}", path.display())),
    })
}

fn measure(a: &MeasureArgs) -> Result<String, CliError> {
    let law: Distribution = match (&a.dist, &a.data) {
        (Some(d), _) => d.clone().into(),
        (None, Some(path)) => EmpiricalDistribution::new(&load_series(path)?.losses()?)?.into(),
        (None, None) => return Err(CliError::Config("give --dist or --data".into())),
    };
    let mut out = String::from("spec,value\n");
    for spec in &a.specs {
        let _ = writeln!(out, "{spec},{}", spec.evaluate(&law)?);
    }
    Ok(out)
}

/// Realized losses keyed by ISO date.
fn realized_losses(path: &Path) -> Result<(Vec<String>, Vec<f64>), CliError> {
    let s = load_series(path)?;
    let losses = s.losses()?;
    let skip = s.dates.len() - losses.len();
    Ok((
        s.dates[skip..].iter().map(|d| d.to_string()).collect(),
        losses,
    ))
}

/// Named numeric columns from a CSV whose first column is `date`.
fn read_columns(path: &Path, names: &[&str]) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let where_ = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| where_(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| where_(e.to_string()))?.clone();
    if !headers
        .get(0)
        .is_some_and(|h| h.eq_ignore_ascii_case("date"))
    {
        return Err(where_("first column must be `date`".into()));
    }
    let idx = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(n))
                .ok_or_else(|| where_(format!("missing column `{n}`")))
        })
        .collect::<Result<Vec<usize>, _>>()?;
    let mut dates = Vec::new();
    let mut cols = vec![Vec::new(); names.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| where_(format!("line {}: {e}", i + 2)))?;
        dates.push(rec[0].to_string());
        for (col, &j) in cols.iter_mut().zip(&idx) {
            let v: f64 = rec
                .get(j)
                .and_then(|t| t.parse().ok())
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| {
                    where_(format!(
                        "line {}: column `{}` is not a number",
                        i + 2,
                        &headers[j]
                    ))
                })?;
            col.push(v);
        }
    }
    Ok((dates, cols))
}

fn check_dates(realized: &[String], forecast: &[String], path: &Path) -> Result<(), CliError> {
    if realized != forecast {
        let first = realized.iter().zip(forecast).position(|(a, b)| a != b);
        return Err(CliError::Config(match first {
            Some(i) => format!(
                "{}: date {} does not match realized date {}",
                path.display(),
                forecast[i],
                realized[i]
            ),
            None => format!(
                "{}: {} forecasts for {} realized values",
                path.display(),
                forecast.len(),
                realized.len()
            ),
        }));
    }
    Ok(())
}

fn exceedance_series(a: &SeriesArgs) -> Result<ExceedanceSeries, CliError> {
    let (dates, losses) = realized_losses(&a.realized)?;
    let (fdates, cols) = read_columns(&a.forecast, &["var"])?;
    check_dates(&dates, &fdates, &a.forecast)?;
    Ok(exceedances(&losses, &cols[0], a.alpha)?)
}

fn backtest(cmd: &BacktestCommand) -> Result<String, CliError> {
    match cmd {
        BacktestCommand::Kupiec(c) => {
            let e = ExceedanceSeries::with_count(c.window, c.exceedances, c.alpha)?;
            Ok(format!("{}\n", kupiec_pof(&e).to_line()))
        }
        BacktestCommand::TrafficLight(c) => {
            let e = ExceedanceSeries::with_count(c.window, c.exceedances, c.alpha)?;
            Ok(format!("{}\n", traffic_light(&e).to_line()))
        }
        BacktestCommand::Christoffersen(a) => {
            let e = exceedance_series(a)?;
            let reports = [christoffersen_independence(&e)?, christoffersen_cc(&e)?];
            Ok(reports_to_csv(&reports, a.size))
        }
        BacktestCommand::Run(a) => {
            let e = exceedance_series(a)?;
            let reports = [
                kupiec_pof(&e),
                traffic_light(&e),
                christoffersen_independence(&e)?,
                christoffersen_cc(&e)?,
            ];
            Ok(reports_to_csv(&reports, a.size))
        }
        BacktestCommand::Compare(a) => {
            let (dates, losses) = realized_losses(&a.realized)?;
            let s = ScoringFunction::joint_var_es(a.alpha, a.g2)?;
            let mut scores = Vec::with_capacity(2);
            for path in [&a.model, &a.benchmark] {
                let (fdates, cols) = read_columns(path, &["var", "es"])?;
                check_dates(&dates, &fdates, path)?;
                let v = losses
                    .iter()
                    .enumerate()
                    .map(|(t, y)| score(&s, Forecast::Pair(cols[0][t], cols[1][t]), *y))
                    .collect::<tailrisk::error::Result<Vec<f64>>>()?;
                scores.push(v);
            }
            let report = comparative_score_backtest(&scores[0], &scores[1], a.hypothesis)?;
            Ok(reports_to_csv(&[report], a.size))
        }
    }
}

fn aggregate(a: &AggregateArgs) -> Result<String, CliError> {
    let text = std::fs::read_to_string(&a.scenarios)
        .map_err(|e| CliError::Config(format!("{}: {e}", a.scenarios.display())))?;
    let base = a.scenarios.parent().unwrap_or(Path::new("."));
    let cfg = parse_scenario_config(&text, base)
        .map_err(|e| CliError::Config(format!("{}: {e}", a.scenarios.display())))?;
    let x = cfg.risk_input()?;
    let mut out = String::from("scenario,value\n");
    for (s, v) in cfg.scenarios.iter().zip(x.values()) {
        let _ = writeln!(out, "{},{v}", s.label);
    }
    let _ = writeln!(
        out,
        "charge,{}",
        tailrisk::scenario::aggregate(&x, &cfg.priors)?
    );
    Ok(out)
}

fn forecast(a: &ForecastArgs) -> Result<String, CliError> {
    let s = load_series(&a.data)?;
    let keep =
        |d: &chrono::NaiveDate| a.from.is_none_or(|f| *d >= f) && a.to.is_none_or(|t| *d <= t);
    let (dates, values): (Vec<_>, Vec<_>) = s
        .dates
        .iter()
        .zip(&s.values)
        .filter(|(d, _)| keep(d))
        .map(|(d, v)| (*d, *v))
        .unzip();
    let window = Series {
        kind: s.kind,
        dates,
        values,
    };
    let table = model_comparison_table(&window.returns()?, a.notional, &a.alphas, a.standardized)?;
    eprintln!("model 1: {:?}", table.gaussian.model);
    eprintln!("model 2: {:?}", table.student.model);
    Ok(tailrisk::forecast::comparison_to_csv(&table.rows))
}

fn interior_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = (hi - lo) / (points + 1) as f64;
    (1..=points).map(|i| lo + step * i as f64).collect()
}

fn counterexample(a: &CounterexampleArgs, seed: u64) -> Result<String, CliError> {
    if a.points == 0 {
        return Err(CliError::Config("--points must be positive".into()));
    }
    let grid = interior_grid(a.lo, a.hi, a.points);
    let rows = counterexample_curves(a.mu, a.sigma, a.alpha, a.scale, &grid, a.g2)?;
    let Some(n) = a.mc else {
        return Ok(tailrisk::elicit::curves_to_csv(&rows));
    };
    let mc = counterexample_monte_carlo(a.mu, a.sigma, a.alpha, a.scale, &grid, a.g2, n, seed)?;
    let mut out = String::from(
        "x,bank_score,benchmark_score,bank_mc,bank_mc_se,benchmark_mc,benchmark_mc_se\n",
    );
    for (r, m) in rows.iter().zip(&mc) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.x, r.bank, r.benchmark, m.bank, m.bank_se, m.benchmark, m.benchmark_se
        );
    }
    Ok(out)
}

fn default_suite() -> Vec<RiskMeasureSpec> {
    [
        "var@0.9",
        "ms@0.9",
        "mean",
        "qmix@0.5:c=0.5",
        "endpoint:c=0.3",
        "es@0.5",
        "es@0.9",
    ]
    .iter()
    .map(|s| s.parse().expect("built-in spec"))
    .collect()
}

fn law_text(d: &tailrisk::dist::DiscreteDistribution) -> String {
    d.atoms()
        .iter()
        .zip(d.probs())
        .map(|(x, p)| format!("{x}:{p}"))
        .collect::<Vec<_>>()
        .join(";")
}

fn cls_check(a: &ClsArgs, seed: u64) -> Result<String, CliError> {
    let specs = if a.specs.is_empty() {
        default_suite()
    } else {
        a.specs.clone()
    };
    let mut out = String::from("spec,trials,violation,lambda,rho_f1,rho_f2,rho_mix,f1,f2\n");
    for spec in &specs {
        match search_cls_violation(spec, a.support, a.trials, seed)? {
            None => {
                let _ = writeln!(out, "{spec},{},false,,,,,,", a.trials);
            }
            Some(w) => {
                let _ = writeln!(
                    out,
                    "{spec},{},true,{},{},{},{},{},{}",
                    a.trials,
                    w.lambda,
                    w.rho_f1,
                    w.rho_f2,
                    w.rho_mix,
                    law_text(&w.f1),
                    law_text(&w.f2)
                );
            }
        }
    }
    Ok(out)
}
