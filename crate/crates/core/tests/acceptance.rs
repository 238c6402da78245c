//! End-to-end acceptance checks. Each criterion prints one line; the test
//! fails if any criterion fails.

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, Continuous, ContinuousCDF, Discrete, DiscreteCDF, Normal};

use tailrisk::backtest::{kupiec_pof, traffic_light, ExceedanceSeries, Zone};
use tailrisk::dist::{mixture, DiscreteDistribution, Distribution, ParametricDistribution};
use tailrisk::elicit::{
    convex_level_set_check, counterexample_curves, counterexample_monte_carlo,
    minimize_expected_score, random_matched_pair, search_cls_violation, true_pair, G2Preset,
    GridSpec, ScoringFunction,
};
use tailrisk::forecast::{
    fit_igarch, model_comparison_table, simulate, Family, IgarchModel, Innovation,
};
use tailrisk::measures::{self, RiskMeasureSpec};
use tailrisk::scenario::{
    aggregate, basel2_charge, window_rule_as_aggregate, PriorSet, ScenarioRiskInput,
};

const LEVELS: [f64; 6] = [0.97, 0.975, 0.98, 0.985, 0.99, 0.995];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion(id: u32, name: &str, limit_secs: f64, run: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = run();
    let secs = start.elapsed().as_secs_f64();
    let pass = o.pass && secs < limit_secs;
    println!(
        "criterion {id:>2} [{}] {name}: {} ({secs:.2}s, limit {limit_secs}s)",
        if pass { "PASS" } else { "FAIL" },
        o.detail
    );
    pass
}

fn normal_oracle() -> Outcome {
    let d: Distribution = ParametricDistribution::normal(-1.5, 1.0).unwrap().into();
    let v = measures::var(&d, 0.975).unwrap();
    let e = measures::es(&d, 0.975).unwrap();
    outcome(
        (v - 0.460).abs() < 1e-3 && (e - 0.838).abs() < 1e-3,
        format!("VaR={v:.6} ES={e:.6}"),
    )
}

fn es_blindness() -> Outcome {
    let mut es_ok = true;
    let mut hidden = true;
    let mut ms_values = Vec::new();
    let mut parts = Vec::new();
    for n in [10.0, 100.0, 1000.0, 10_000.0] {
        let p = ParametricDistribution::translated_exp_mixture(0.0, 1.0, 1.0, n).unwrap();
        let beta = p.atom_weight().unwrap();
        let d: Distribution = p.into();
        let es = measures::es(&d, 0.0).unwrap();
        let ms = measures::ms(&d, 0.0).unwrap();
        es_ok &= (es - 2.0).abs() < 1e-6;
        // Same weight, atom moved further out.
        let body: Distribution = ParametricDistribution::exponential(1.0, 0.0)
            .unwrap()
            .into();
        let far: Distribution = DiscreteDistribution::point_mass(3.0 * n).unwrap().into();
        let moved = mixture(&[body, far], &[1.0 - beta, beta]).unwrap();
        hidden &= (measures::ms(&moved, 0.0).unwrap() - ms).abs() < 1e-9;
        ms_values.push(ms);
        parts.push(format!("n={n}: ES={es:.7} MS={ms:.6}"));
    }
    let spread = ms_values.iter().cloned().fold(f64::MIN, f64::max)
        - ms_values.iter().cloned().fold(f64::MAX, f64::min);
    let constant = spread < 1e-6;
    outcome(
        es_ok && constant && hidden,
        format!(
            "{}; ES=2 {es_ok}; MS constant {constant} (spread {spread:.4}); atom invisible to MS {hidden}",
            parts.join(", ")
        ),
    )
}

fn random_discrete(rng: &mut impl Rng) -> DiscreteDistribution {
    let n = rng.random_range(1..=6);
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(-10.0..10.0), 0.05 + rng.random::<f64>()))
        .collect();
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let pairs: Vec<(f64, f64)> = pairs.into_iter().map(|(x, p)| (x, p / total)).collect();
    DiscreteDistribution::from_pairs(&pairs).unwrap()
}

fn elicitability_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let grid = GridSpec::new(-12.0, 12.0, 2401).unwrap();
    let mut worst_q = 0.0f64;
    let mut worst_mean = 0.0f64;
    for _ in 0..500 {
        let law = random_discrete(&mut rng);
        let d = Distribution::Discrete(law.clone());
        for k in 1..=9 {
            let alpha = f64::from(k) / 10.0;
            let a = minimize_expected_score(&ScoringFunction::quantile(alpha).unwrap(), &d, grid)
                .unwrap();
            worst_q = worst_q
                .max((a.lower - law.quantile_left(alpha)).abs())
                .max((a.upper - law.quantile_right(alpha)).abs());
        }
        let m = minimize_expected_score(
            &ScoringFunction::SquaredError,
            &d,
            GridSpec::new(-12.0, 12.0, 241).unwrap(),
        )
        .unwrap();
        worst_mean = worst_mean.max((m.rho() - law.mean()).abs());
    }
    outcome(
        worst_q <= 1e-4 && worst_mean <= 1e-6,
        format!("worst quantile-interval error {worst_q:.2e}, worst mean error {worst_mean:.2e}"),
    )
}

fn level_set_suite() -> Outcome {
    let lambdas: Vec<f64> = (1..10).map(|k| f64::from(k) / 10.0).collect();
    let families = [
        RiskMeasureSpec::var(0.9).unwrap(),
        RiskMeasureSpec::ms(0.9).unwrap(),
        RiskMeasureSpec::mean(),
        RiskMeasureSpec::quantile_mix(0.5, 0.5).unwrap(),
        RiskMeasureSpec::endpoint_mix(0.3).unwrap(),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, spec) in families.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        let (mut matched, mut violations, mut attempts) = (0, 0, 0);
        while matched < 1000 && attempts < 200_000 {
            attempts += 1;
            if let Some((f1, f2)) = random_matched_pair(spec, 6, &mut rng).unwrap() {
                if !convex_level_set_check(spec, &f1, &f2, &lambdas, 1e-8)
                    .unwrap()
                    .is_pass()
                {
                    violations += 1;
                }
                matched += 1;
            }
        }
        pass &= matched == 1000 && violations == 0;
        parts.push(format!("{spec}: {violations}/{matched}"));
    }
    for alpha in [0.5, 0.9] {
        let spec = RiskMeasureSpec::es(alpha).unwrap();
        let found = search_cls_violation(&spec, 3, 10_000, 7).unwrap().is_some();
        pass &= found;
        parts.push(format!("{spec}: witness {found}"));
    }
    outcome(pass, parts.join(", "))
}

fn misreport_grid() -> Vec<f64> {
    (1..47).map(|i| 0.55 + 0.45 * f64::from(i) / 47.0).collect()
}

fn counterexample_reproduction() -> Outcome {
    let grid = misreport_grid();
    let rows = counterexample_curves(-1.5, 1.0, 0.975, 1.0, &grid, G2Preset::Logistic).unwrap();
    let below = rows.iter().filter(|r| r.bank < r.benchmark).count();
    let mc =
        counterexample_monte_carlo(-1.5, 1.0, 0.975, 1.0, &grid, G2Preset::Logistic, 200_000, 9)
            .unwrap();
    let mut worst = 0.0f64;
    for (q, m) in rows.iter().zip(&mc) {
        worst = worst
            .max((q.bank - m.bank).abs() / m.bank_se)
            .max((q.benchmark - m.benchmark).abs() / m.benchmark_se);
    }
    outcome(
        below == grid.len() && worst <= 3.0,
        format!(
            "bank below benchmark at {below}/{} points; worst quadrature-MC gap {worst:.2} s.e.",
            grid.len()
        ),
    )
}

/// Closed-form expected joint score under `Normal(m, s^2)`.
fn normal_expected_joint(m: f64, s: f64, alpha: f64, g2: G2Preset, v: f64, e: f64) -> f64 {
    let n = Normal::standard();
    let z = (v - m) / s;
    let pinball = (v - m) * (n.cdf(z) - alpha) + s * n.pdf(z);
    let excess = s * n.pdf(z) + (m - v) * n.sf(z);
    let w = g2.g2(-e);
    pinball + w * excess / (1.0 - alpha) + w * (v - e) - g2.antiderivative(-e)
}

fn bank_spread(k: f64, g2: G2Preset) -> (f64, f64) {
    let grid = misreport_grid();
    let rows = counterexample_curves(-1.5, 1.0, 0.975, k, &grid, g2).unwrap();
    let (v, e) = true_pair(-1.5, 1.0, 0.975, k).unwrap();
    let oracle_gap = rows
        .iter()
        .map(|r| (r.bank - normal_expected_joint(-1.5 * k, k, 0.975, g2, v, r.x * e)).abs())
        .fold(0.0, f64::max);
    let hi = rows.iter().map(|r| r.bank).fold(f64::MIN, f64::max);
    let lo = rows.iter().map(|r| r.bank).fold(f64::MAX, f64::min);
    (hi - lo, oracle_gap)
}

fn scale_insensitivity() -> Outcome {
    let (s1, g1) = bank_spread(1.0, G2Preset::Logistic);
    let (s15, g15) = bank_spread(15.0, G2Preset::Logistic);
    let (e1, _) = bank_spread(1.0, G2Preset::Exp);
    let (e15, _) = bank_spread(15.0, G2Preset::Exp);
    let ratio = s1 / s15;
    let oracle_ok = g1 < 1e-8 && g15 < 1e-8;
    outcome(
        ratio >= 10.0 && oracle_ok,
        format!(
            "spread k=1 {s1:.4e}, k=15 {s15:.4e}, shrink {ratio:.2}x (need 10x); oracle gap {:.1e}; \
             spread/k shrink {:.1}x; exp preset shrink {:.2}x",
            g1.max(g15),
            ratio * 15.0,
            e1 / e15
        ),
    )
}

fn binomial_pmf(t: usize, p: f64) -> Vec<f64> {
    let mut pmf = vec![(1.0 - p).powi(t as i32)];
    for n in 1..=t {
        let prev = pmf[n - 1];
        pmf.push(prev * (t - n + 1) as f64 / n as f64 * p / (1.0 - p));
    }
    pmf
}

fn backtest_correctness() -> Outcome {
    let e0 = ExceedanceSeries::with_count(250, 0, 0.99).unwrap();
    let lr = kupiec_pof(&e0).statistic;
    let lr_ok = (lr + 2.0 * 250.0 * 0.99f64.ln()).abs() < 1e-9;

    let pmf = binomial_pmf(250, 0.01);
    let mut cum = 0.0;
    let mut zones_ok = true;
    for (n, p) in pmf.iter().enumerate().take(21) {
        cum += p;
        let want = if cum < 0.95 {
            Zone::Green
        } else if cum < 0.9999 {
            Zone::Yellow
        } else {
            Zone::Red
        };
        let got = traffic_light(&ExceedanceSeries::with_count(250, n, 0.99).unwrap()).zone;
        zones_ok &= got == Some(want);
    }

    let law = Binomial::new(0.01, 250).unwrap();
    let exact: f64 = (0..=250)
        .filter(|&n| {
            kupiec_pof(&ExceedanceSeries::with_count(250, n, 0.99).unwrap()).p_value <= 0.05
        })
        .map(|n| law.pmf(n as u64))
        .sum();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let reps = 1000;
    let rejections = (0..reps)
        .filter(|_| {
            let ind: Vec<bool> = (0..250).map(|_| rng.random::<f64>() < 0.01).collect();
            kupiec_pof(&ExceedanceSeries::new(ind, 0.99).unwrap()).p_value <= 0.05
        })
        .count();
    let rate = rejections as f64 / reps as f64;
    let half = 3.0 * (exact * (1.0 - exact) / reps as f64).sqrt();
    let size_ok = (rate - exact).abs() <= half;
    debug_assert!(law.cdf(250) > 0.999);
    outcome(
        lr_ok && zones_ok && size_ok,
        format!(
            "LR(N=0)={lr:.12}; zones match {zones_ok}; null rejection {rate:.3} in [{:.3}, {:.3}] around exact size {exact:.4}",
            exact - half,
            exact + half
        ),
    )
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

fn simplex(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.into_iter().map(|x| x / s).collect();
    let head: f64 = w[..m - 1].iter().sum();
    w[m - 1] = (1.0 - head).max(0.0);
    w
}

fn basel_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut identity = 0;
    for _ in 0..1000 {
        let today = rng.random_range(0.0..20.0);
        let history: Vec<f64> = (0..60).map(|_| rng.random_range(0.0..10.0)).collect();
        let s = rng.random_range(3.0..5.0);
        let (x, w) = window_rule_as_aggregate(today, &history, s).unwrap();
        if close(
            aggregate(&x, &w).unwrap(),
            basel2_charge(today, &history, s).unwrap(),
        ) {
            identity += 1;
        }
    }
    let mut axioms = 0;
    for _ in 0..1000 {
        let m = 5;
        let w = PriorSet::new((0..4).map(|_| simplex(&mut rng, m)).collect()).unwrap();
        let s = rng.random_range(0.5..4.0);
        let xs: Vec<f64> = (0..m).map(|_| rng.random_range(-10.0..10.0)).collect();
        let ys: Vec<f64> = (0..m).map(|_| rng.random_range(-10.0..10.0)).collect();
        let f = |v: Vec<f64>| aggregate(&ScenarioRiskInput::new(v, s).unwrap(), &w).unwrap();
        let (a, b) = (rng.random_range(0.0..5.0), rng.random_range(-5.0..5.0));
        let fx = f(xs.clone());
        let b1 = close(f(xs.iter().map(|x| a * x + b).collect()), a * fx + s * b);
        let bumped: Vec<f64> = xs.iter().map(|x| x + rng.random_range(0.0..3.0)).collect();
        let b2 = fx <= f(bumped) + 1e-12 * (1.0 + fx.abs());
        let sum = f(xs.iter().zip(&ys).map(|(x, y)| x + y).collect());
        let b3 = sum <= fx + f(ys.clone()) + 1e-12 * (1.0 + sum.abs());
        if b1 && b2 && b3 {
            axioms += 1;
        }
    }
    outcome(
        identity == 1000 && axioms == 1000,
        format!("identity {identity}/1000; axioms {axioms}/1000"),
    )
}

fn igarch_recovery() -> Outcome {
    let truth = IgarchModel::new(0.0, 0.94, Innovation::Gaussian, 1e-4).unwrap();
    let betas: Vec<Option<f64>> = (0..20)
        .map(|seed| {
            let r = simulate(&truth, 5000, 1000 + seed);
            fit_igarch(&r, Family::Gaussian).ok().map(|f| f.model.beta)
        })
        .collect();
    let hits = betas
        .iter()
        .filter(|b| b.is_some_and(|b| (b - 0.94).abs() < 0.02))
        .count();
    let worst = betas
        .iter()
        .flatten()
        .map(|b| (b - 0.94).abs())
        .fold(0.0, f64::max);
    outcome(
        hits >= 18,
        format!("{hits}/20 within 0.02; worst deviation {worst:.4}"),
    )
}

fn sp500_golden(path: PathBuf) -> Result<String, String> {
    let s = tailrisk::io::read_series(&path).map_err(|e| e.to_string())?;
    let lo = chrono::NaiveDate::from_ymd_opt(1980, 1, 2).unwrap();
    let hi = chrono::NaiveDate::from_ymd_opt(2012, 11, 26).unwrap();
    let values: Vec<f64> = s
        .dates
        .iter()
        .zip(&s.values)
        .filter(|(d, _)| (lo..=hi).contains(*d))
        .map(|(_, v)| *v)
        .collect();
    let window = tailrisk::io::Series {
        kind: s.kind,
        dates: Vec::new(),
        values,
    };
    let r = window.returns().map_err(|e| e.to_string())?;
    let table = model_comparison_table(&r, 1e6, &LEVELS, false).map_err(|e| e.to_string())?;
    let reference = [
        (19956.0, 21699.0, 19070.0, 19868.0),
        (20586.0, 22690.0, 19715.0, 20826.0),
        (21337.0, 23918.0, 20483.0, 22011.0),
        (22275.0, 25530.0, 21441.0, 23564.0),
        (23546.0, 27863.0, 22738.0, 25807.0),
        (25595.0, 32049.0, 24827.0, 29823.0),
    ];
    let mut worst = 0.0f64;
    for (row, (es1, es2, ms1, ms2)) in table.rows.iter().zip(reference) {
        for (got, want) in [
            (row.es1, es1),
            (row.es2, es2),
            (row.ms1, ms1),
            (row.ms2, ms2),
        ] {
            worst = worst.max((got - want).abs() / want);
        }
    }
    if worst <= 0.01 {
        Ok(format!(
            "reference rows matched, worst relative gap {worst:.4}"
        ))
    } else {
        Err(format!("reference rows off by up to {:.2}%", 100.0 * worst))
    }
}

fn table_surrogate() -> Outcome {
    let truth = IgarchModel::new(
        0.0003,
        0.94,
        Innovation::StudentT {
            nu: 5.0,
            standardized: true,
        },
        1e-4,
    )
    .unwrap();
    let r = simulate(&truth, 5000, 31);
    let table = model_comparison_table(&r, 1e6, &LEVELS, true).unwrap();
    let ratios: Vec<String> = table
        .rows
        .iter()
        .map(|row| format!("{:.1}%", 100.0 * row.ratio))
        .collect();
    let positive = table.rows.iter().all(|row| row.ratio > 0.0);
    let golden = std::env::var_os("TAILRISK_SP500_CSV").map(|p| sp500_golden(PathBuf::from(p)));
    let (golden_ok, golden_text) = match golden {
        None => (
            true,
            "dataset not configured, golden check skipped".to_string(),
        ),
        Some(Ok(t)) => (true, t),
        Some(Err(t)) => (false, t),
    };
    outcome(
        positive && golden_ok,
        format!("t5 ratio column [{}]; {golden_text}", ratios.join(", ")),
    )
}

#[test]
fn acceptance_suite() {
    let results = [
        criterion(1, "normal oracle values", 1.0, normal_oracle),
        criterion(
            2,
            "ES blind to the translated mass point",
            1.0,
            es_blindness,
        ),
        criterion(3, "elicitability recovery", 60.0, elicitability_recovery),
        criterion(4, "convex level sets", 120.0, level_set_suite),
        criterion(5, "bank below benchmark", 60.0, counterexample_reproduction),
        criterion(6, "scale insensitivity", 60.0, scale_insensitivity),
        criterion(7, "backtest correctness", 60.0, backtest_correctness),
        criterion(8, "window rule as aggregate", 10.0, basel_identity),
        criterion(9, "IGARCH recovery", 120.0, igarch_recovery),
        criterion(
            10,
            "model sensitivity of ES over MS",
            120.0,
            table_surrogate,
        ),
    ];
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, ok)| !**ok)
        .map(|(i, _)| i + 1)
        .collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
