use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tailrisk::backtest::Hypothesis;
use tailrisk::dist::ParametricDistribution;
use tailrisk::elicit::G2Preset;
use tailrisk::measures::RiskMeasureSpec;

pub const DEFAULT_LEVELS: [f64; 6] = [0.97, 0.975, 0.98, 0.985, 0.99, 0.995];

#[derive(Debug, Parser)]
#[command(
    name = "tailrisk",
    version,
    about = "Tail risk measures, backtests, scenario charges and IGARCH forecasts"
)]
pub struct Cli {
    /// Key-value file whose entries act as flags; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Write output here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate risk measures on a parametric law or a data file.
    Measure(MeasureArgs),
    /// Exceedance and comparative score backtests.
    Backtest {
        #[command(subcommand)]
        test: BacktestCommand,
    },
    /// Scenario-based capital charge from a scenario file.
    Aggregate(AggregateArgs),
    /// Fit Gaussian and Student-t IGARCH models and compare MS/ES forecasts.
    Forecast(ForecastArgs),
    /// Expected joint scores of the bank and benchmark strategies.
    Counterexample(CounterexampleArgs),
    /// Randomized convex-level-set search per measure.
    ClsCheck(ClsArgs),
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Parametric law, e.g. `normal:mu=-1.5,sigma=1`.
    #[arg(long, conflicts_with = "data", required_unless_present = "data")]
    pub dist: Option<ParametricDistribution>,

    /// CSV series; its losses form an empirical law.
    #[arg(long, value_name = "CSV")]
    pub data: Option<PathBuf>,

    /// Measure spec `name@alpha[:key=value,...]`; repeatable.
    #[arg(long = "spec", required = true)]
    pub specs: Vec<RiskMeasureSpec>,
}

#[derive(Debug, Subcommand)]
pub enum BacktestCommand {
    /// Kupiec proportion-of-failures test from an exceedance count.
    Kupiec(CountArgs),
    /// Traffic-light zone from an exceedance count.
    TrafficLight(CountArgs),
    /// Christoffersen independence and conditional coverage.
    Christoffersen(SeriesArgs),
    /// Every exceedance test on a realized series and its VaR forecasts.
    Run(SeriesArgs),
    /// Comparative joint-score backtest of model against benchmark forecasts.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub exceedances: usize,
    #[arg(long)]
    pub window: usize,
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    /// Realized series: `date,loss`, `date,return` or `date,price`.
    #[arg(long, value_name = "CSV")]
    pub realized: PathBuf,
    /// Forecasts with `date` and `var` columns.
    #[arg(long, value_name = "CSV")]
    pub forecast: PathBuf,
    #[arg(long)]
    pub alpha: f64,
    /// Test size for the reject column.
    #[arg(long, default_value_t = 0.05)]
    pub size: f64,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, value_name = "CSV")]
    pub realized: PathBuf,
    /// Model forecasts with `date`, `var` and `es` columns.
    #[arg(long, value_name = "CSV")]
    pub model: PathBuf,
    /// Benchmark forecasts, same layout.
    #[arg(long, value_name = "CSV")]
    pub benchmark: PathBuf,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value = "logistic")]
    pub g2: G2Preset,
    /// `model_worse` or `model_better`.
    #[arg(long, default_value = "model_worse")]
    pub hypothesis: Hypothesis,
    #[arg(long, default_value_t = 0.05)]
    pub size: f64,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// Scenario file; data paths resolve against its directory.
    pub scenarios: PathBuf,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    /// Price or return series.
    #[arg(long, value_name = "CSV")]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1e6)]
    pub notional: f64,
    /// Comma-separated levels.
    #[arg(long = "alpha", value_delimiter = ',', default_values_t = DEFAULT_LEVELS)]
    pub alphas: Vec<f64>,
    /// Unit-variance Student-t innovations instead of raw t.
    #[arg(long)]
    pub standardized: bool,
    /// First date kept, inclusive.
    #[arg(long, value_name = "YYYY-MM-DD")]
    pub from: Option<chrono::NaiveDate>,
    /// Last date kept, inclusive.
    #[arg(long, value_name = "YYYY-MM-DD")]
    pub to: Option<chrono::NaiveDate>,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long)]
    pub alpha: f64,
    /// Score scale k.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value = "logistic")]
    pub g2: G2Preset,
    /// Grid runs over the interior of [lo, hi].
    #[arg(long, default_value_t = 0.55)]
    pub lo: f64,
    #[arg(long, default_value_t = 1.0)]
    pub hi: f64,
    #[arg(long, default_value_t = 46)]
    pub points: usize,
    /// Add Monte-Carlo columns from this many draws.
    #[arg(long, value_name = "N")]
    pub mc: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ClsArgs {
    /// Measure spec; repeatable. Defaults to the standard suite.
    #[arg(long = "spec")]
    pub specs: Vec<RiskMeasureSpec>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Maximum atoms per random law.
    #[arg(long, default_value_t = 6)]
    pub support: usize,
}
