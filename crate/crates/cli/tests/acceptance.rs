//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run a subset by number: `cargo test -p tempest-cli --test acceptance -- 5 6`.

use std::collections::BTreeMap;
use std::error::Error;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StudentT};
use tempest_core::analytics::{carhart, monthly_summary};
use tempest_core::arma_garch::{fit, simulate, ArmaGarchFit, ArmaGarchOptions, ArmaGarchParams, Innovations};
use tempest_core::cts::{fit_mle, standardize, CtsDistribution, FitOptions};
use tempest_core::data_ingest::{load_prices, to_returns, FactorRow};
use tempest_core::momentum::{backtest, run_backtest_multi, BacktestConfig, Universe};
use tempest_core::reward_risk::{mdd, wealth_path, Criterion};
use tempest_core::synthetic::TailDriftUniverse;

type Outcome = Result<Check, Box<dyn Error>>;

struct Check {
    pass: bool,
    detail: String,
}

impl Check {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn within_budget(pass: bool, detail: String, started: Instant, budget: Duration) -> Check {
    let elapsed = started.elapsed();
    let in_time = elapsed <= budget;
    let detail = format!("{detail}; {:.1}s of {}s budget", elapsed.as_secs_f64(), budget.as_secs());
    Check::new(pass && in_time, detail)
}

fn rel(x: f64, truth: f64) -> f64 {
    ((x - truth) / truth).abs()
}

/// Mean of the lowest `eta` share of `draws`, negated.
fn tail_mean_loss(draws: &mut [f64], eta: f64) -> f64 {
    let k = (eta * draws.len() as f64).round() as usize;
    draws.select_nth_unstable_by(k, f64::total_cmp);
    -draws[..k].iter().sum::<f64>() / k as f64
}

fn random_shape(rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    (rng.random_range(0.1..1.95), rng.random_range(0.3..5.0), rng.random_range(0.3..5.0))
}

fn c1_cts_correctness() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut mass, mut mean, mut var, mut round_trip) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..100 {
        let (a, lp, lm) = random_shape(&mut rng);
        let d = CtsDistribution::new(standardize(a, lp, lm)?.to_cts())?;
        let g = d.grid();
        mass = mass.max((g.trapezoid_mass() - 1.0).abs());
        let (m, v) = g.grid_mean_variance();
        mean = mean.max(m.abs());
        var = var.max((v - 1.0).abs());
        for p in [0.001, 0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99, 0.999] {
            round_trip = round_trip.max((d.cdf(d.quantile(p)?) - p).abs());
        }
        for x in [-2.0, -1.5, -0.5, 0.0, 0.8, 2.0] {
            round_trip = round_trip.max((d.quantile(d.cdf(x))? - x).abs());
        }
    }
    let pass = mass <= 1e-6 && mean <= 1e-4 && var <= 1e-4 && round_trip < 1e-6;
    let detail = format!(
        "100 shapes: max |mass-1| {mass:.1e}, |mean| {mean:.1e}, |var-1| {var:.1e}, round trip {round_trip:.1e}"
    );
    Ok(within_budget(pass, detail, started, Duration::from_secs(120)))
}

fn c2_cvar_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0_f64;
    let mut ordered = true;
    for k in 0..10 {
        let (a, lp, lm) = random_shape(&mut rng);
        let d = CtsDistribution::new(standardize(a, lp, lm)?.to_cts())?;
        let cvar = d.cvar(0.95)?;
        let mut draws = d.sample(10_000_000, 200 + k);
        let mc = tail_mean_loss(&mut draws, 0.05);
        worst = worst.max(rel(cvar, mc));
        let levels = (1..200).map(|i| i as f64 * 0.005).chain([0.999]);
        for c in levels {
            ordered &= d.cvar(c)? >= d.var(c)?;
        }
    }
    let detail = format!("10 shapes: worst CVaR95 vs 1e7-draw tail mean {:.3}%, CVaR >= VaR: {ordered}", 100.0 * worst);
    Ok(within_budget(worst < 0.01 && ordered, detail, started, Duration::from_secs(300)))
}

fn innovation_draws(law: &Innovations, n: usize, seed: u64) -> Result<Vec<f64>, Box<dyn Error>> {
    Ok(match law {
        Innovations::Cts(p) => CtsDistribution::new(p.to_cts())?.sample(n, seed),
        Innovations::StudentT { nu } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = StudentT::new(*nu)?;
            let scale = ((nu - 2.0) / nu).sqrt();
            (0..n).map(|_| t.sample(&mut rng) * scale).collect()
        }
    })
}

fn c3_forecast_transport() -> Outcome {
    let models = [
        ((3e-4, 0.2, 0.0, 2e-6, 0.10, 0.85), (1.3, 1.6, 0.9)),
        ((0.0, -0.3, 0.1, 1e-6, 0.05, 0.90), (0.8, 1.0, 2.0)),
        ((5e-4, 0.0, 0.0, 4e-6, 0.12, 0.80), (1.6, 3.0, 0.6)),
        ((-2e-4, 0.4, -0.1, 1.5e-6, 0.08, 0.88), (1.1, 0.7, 0.7)),
        ((1e-4, 0.1, 0.3, 3e-6, 0.15, 0.75), (1.8, 2.5, 1.2)),
    ];
    let mut worst = 0.0_f64;
    let mut lines = Vec::new();
    for (k, ((c, a, b, omega, alpha1, beta1), (sa, lp, lm))) in models.into_iter().enumerate() {
        let truth = ArmaGarchParams { c, a, b, omega, alpha1, beta1, nu: 8.0 };
        let eps = CtsDistribution::new(standardize(sa, lp, lm)?.to_cts())?.sample(3000, 301 + k as u64);
        let f = fit(&simulate(&truth, &eps), &ArmaGarchOptions::default())?;
        // one-step law rebuilt from the fitted recursion
        let (p, s) = (&f.params, &f.state);
        let shock = s.sigma_t * s.eps_t;
        let mu = p.c + p.a * s.y_t + p.b * shock;
        let sigma = (p.omega + p.alpha1 * shock * shock + p.beta1 * s.sigma_t * s.sigma_t).sqrt();
        let mut y: Vec<f64> =
            innovation_draws(&f.innovations, 1_000_000, 9000 + k as u64)?.iter().map(|e| mu + sigma * e).collect();
        let mc = tail_mean_loss(&mut y, 0.05);
        let err = rel(f.forecast_cvar(0.95)?, mc);
        worst = worst.max(err);
        lines.push(format!("{:.2}%", 100.0 * err));
    }
    Ok(Check::new(worst < 0.02, format!("one-step CVaR95 vs 1e6-draw simulation, 5 fits: {}", lines.join(" "))))
}

fn arma_recovery() -> Result<(bool, String), Box<dyn Error>> {
    let truth = ArmaGarchParams { c: 2e-4, a: 0.5, b: 0.2, omega: 2e-6, alpha1: 0.10, beta1: 0.85, nu: 8.0 };
    let eps = CtsDistribution::new(standardize(1.3, 1.6, 0.9)?.to_cts())?.sample(20_000, 4242);
    let f: ArmaGarchFit = fit(&simulate(&truth, &eps), &ArmaGarchOptions::default())?;
    let e = f.params;
    let pairs = [
        ("c", e.c, truth.c),
        ("a", e.a, truth.a),
        ("b", e.b, truth.b),
        ("omega", e.omega, truth.omega),
        ("alpha1", e.alpha1, truth.alpha1),
        ("beta1", e.beta1, truth.beta1),
    ];
    let ok = pairs.iter().all(|&(_, x, t)| rel(x, t) <= 0.15 || (x - t).abs() <= 0.02);
    let text: Vec<String> = pairs.iter().map(|(n, x, t)| format!("{n} {x:.4e}/{t:.1e}")).collect();
    Ok((ok, text.join(" ")))
}

fn cts_recovery() -> Result<(bool, String), Box<dyn Error>> {
    let (a, lp, lm) = (1.2, 1.5, 0.8);
    let draws = CtsDistribution::new(standardize(a, lp, lm)?.to_cts())?.sample(50_000, 2024);
    let p = fit_mle(&draws, &FitOptions::default())?.params;
    let errs = [rel(p.alpha(), a), rel(p.lambda_plus(), lp), rel(p.lambda_minus(), lm)];
    let ok = errs.iter().all(|e| *e <= 0.10);
    let text = format!(
        "alpha {:.3} ({:.1}%), lambda+ {:.3} ({:.1}%), lambda- {:.3} ({:.1}%)",
        p.alpha(),
        100.0 * errs[0],
        p.lambda_plus(),
        100.0 * errs[1],
        p.lambda_minus(),
        100.0 * errs[2]
    );
    Ok((ok, text))
}

fn c4_mle_recovery() -> Outcome {
    let started = Instant::now();
    let (arma_ok, arma) = arma_recovery()?;
    let (cts_ok, cts) = cts_recovery()?;
    let detail = format!(
        "ARMA-GARCH 20k [{}]: {arma}; CTS 50k [{}]: {cts}",
        if arma_ok { "ok" } else { "off" },
        if cts_ok { "ok" } else { "off" }
    );
    Ok(within_budget(arma_ok && cts_ok, detail, started, Duration::from_secs(600)))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join(name)
}

fn max_gap(x: &[f64], y: &[f64]) -> f64 {
    if x.len() != y.len() {
        return f64::INFINITY;
    }
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn c5_backtest_oracle() -> Outcome {
    let (prices, _) = load_prices(&fixture("hand_prices.csv"))?;
    let universe = Universe { returns: to_returns(&prices), membership: None, riskfree: None };
    let mut config = BacktestConfig {
        estimation_months: 1,
        holding_months: 1,
        n_baskets: 2,
        criterion: Criterion::CumReturn,
        ..BacktestConfig::default()
    };
    config.summary.model.min_observations = 3;
    let run = backtest(&universe, &config, &[Criterion::CumReturn])?;
    let track = &run.tracks[0];

    // equal-weight buy-and-hold legs worked by hand
    let winner = [0.05, -0.01 / 2.1, 0.0, -0.05, 0.11 / 1.9, 0.0, -0.05, 0.0, 0.2 / 1.9];
    let loser = [0.1, 0.0, -0.5 / 2.2, 0.0, 0.125, 0.1 / 2.25, 0.05, 0.0, 0.0];
    let wml: Vec<f64> = winner.iter().zip(&loser).map(|(w, l)| w - l).collect();
    let monthly_winner = [0.045, 0.005, 0.05];
    let monthly_loser = [-0.15, 0.175, 0.05];
    let monthly_wml = [0.195, -0.17, 0.0];
    let mut wealth = vec![1.0];
    for r in &wml {
        wealth.push(wealth.last().unwrap() * (1.0 + r));
    }
    let mut hand_mdd = 0.0_f64;
    for i in 0..wealth.len() {
        for j in i..wealth.len() {
            hand_mdd = hand_mdd.max(1.0 - wealth[j] / wealth[i]);
        }
    }

    let gaps = [
        ("daily W", max_gap(&track.winner, &winner)),
        ("daily L", max_gap(&track.loser, &loser)),
        ("daily W-L", max_gap(&track.wml, &wml)),
        ("monthly W", max_gap(&track.monthly_winner, &monthly_winner)),
        ("monthly L", max_gap(&track.monthly_loser, &monthly_loser)),
        ("monthly W-L", max_gap(&track.monthly_wml, &monthly_wml)),
        ("MDD", (mdd(&wealth_path(&track.wml))? - hand_mdd).abs()),
        ("final wealth", (monthly_summary(&track.monthly_wml)?.final_wealth - 0.025).abs()),
    ];
    let pass = run.windows.len() == 3 && gaps.iter().all(|(_, g)| *g <= 1e-12);
    let text: Vec<String> = gaps.iter().map(|(n, g)| format!("{n} {g:.1e}")).collect();
    Ok(Check::new(pass, format!("{} windows, MDD {hand_mdd:.6}; gaps {}", run.windows.len(), text.join(", "))))
}

/// Solves `X'X β = X'y` by Gauss-Jordan elimination with partial pivoting.
fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len();
    let mut m = vec![vec![0.0; p + 1]; p];
    for (row, yi) in x.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                m[i][j] += row[i] * row[j];
            }
            m[i][p] += row[i] * yi;
        }
    }
    for col in 0..p {
        let pivot = (col..p).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, pivot);
        for r in 0..p {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..=p {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    (0..p).map(|i| m[i][p] / m[i][i]).collect()
}

fn factor_rows(values: &[[f64; 4]]) -> Vec<FactorRow> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| FactorRow {
            date: NaiveDate::from_ymd_opt(1990 + (i / 12) as i32, (i % 12) as u32 + 1, 28).unwrap(),
            mkt: v[0],
            smb: v[1],
            hml: v[2],
            mom: v[3],
            rf: 0.3,
        })
        .collect()
}

fn c6_carhart() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let noise = Normal::new(0.0, 1.0)?;
    let factor = Normal::new(0.5, 3.0)?;
    let mut worst = 0.0_f64;
    for n in [24, 120, 480] {
        let values: Vec<[f64; 4]> =
            (0..n).map(|_| std::array::from_fn(|_| factor.sample(&mut rng))).collect();
        let y: Vec<f64> = values
            .iter()
            .map(|v| 0.4 + 0.9 * v[0] - 0.2 * v[1] + 0.3 * v[2] + 0.1 * v[3] + 2.0 * noise.sample(&mut rng))
            .collect();
        let design: Vec<Vec<f64>> = values.iter().map(|v| vec![1.0, v[0], v[1], v[2], v[3]]).collect();
        let reference = normal_equations(&design, &y);
        let report = carhart(&y, &factor_rows(&values))?;
        let estimates: Vec<f64> = report.coefficients.iter().map(|c| c.estimate).collect();
        worst = worst.max(max_gap(&estimates, &reference));
    }

    let values: Vec<[f64; 4]> = (0..60).map(|_| std::array::from_fn(|_| factor.sample(&mut rng))).collect();
    let y: Vec<f64> = values.iter().map(|v| 0.5 * v[0]).collect();
    let exact = carhart(&y, &factor_rows(&values))?;
    let beta_gap = (exact.beta("mkt").ok_or("no mkt coefficient")? - 0.5).abs();
    let pass = worst <= 1e-10 && exact.r_squared == 1.0 && beta_gap <= 1e-12;
    let detail = format!(
        "QR vs normal equations (n = 24, 120, 480): {worst:.1e}; exact fixture R² = {}, |beta-0.5| = {beta_gap:.1e}",
        exact.r_squared
    );
    Ok(Check::new(pass, detail))
}

fn c7_tail_drift_claim() -> Outcome {
    let started = Instant::now();
    let config = BacktestConfig::default();
    let criteria = [Criterion::CumReturn, Criterion::Rr50_95];
    let mut wins = 0;
    let mut rows = Vec::new();
    for seed in 1..=20 {
        let universe = Universe {
            returns: TailDriftUniverse::default().generate(seed)?,
            membership: None,
            riskfree: None,
        };
        let tracks = run_backtest_multi(&universe, &config, &criteria)?;
        let stats: Vec<(f64, f64)> = tracks
            .iter()
            .map(|t| {
                let mean = t.monthly_wml.iter().sum::<f64>() / t.monthly_wml.len() as f64;
                Ok((mean, mdd(&wealth_path(&t.wml))?))
            })
            .collect::<Result<_, Box<dyn Error>>>()?;
        let (cum, rr) = (stats[0], stats[1]);
        let better = rr.0 > cum.0 && rr.1 < cum.1;
        wins += better as usize;
        rows.push(format!(
            "    seed {seed:2}: mean W-L {:+.4}% vs {:+.4}%, MDD {:.4} vs {:.4} {}",
            100.0 * rr.0,
            100.0 * cum.0,
            rr.1,
            cum.1,
            if better { "win" } else { "loss" }
        ));
    }
    for r in &rows {
        println!("{r}");
    }
    let detail = format!("R-ratio(50,95) beats cumulative return on both mean and MDD in {wins}/20 seeds (need 18)");
    Ok(within_budget(wins >= 18, detail, started, Duration::from_secs(900)))
}

fn tempest(args: &[&str]) -> Result<(), Box<dyn Error>> {
    let out = Command::new(env!("CARGO_BIN_EXE_tempest")).args(args).env("TEMPEST_LOG", "error").output()?;
    if !out.status.success() {
        return Err(format!("tempest {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)).into());
    }
    Ok(())
}

fn files(dir: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, Box<dyn Error>> {
    let mut found = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                found.insert(path.strip_prefix(dir)?.to_path_buf(), std::fs::read(&path)?);
            }
        }
    }
    Ok(found)
}

/// Runs a config twice, then once more from the first run's manifest.
fn identical_runs(config: &Path, root: &Path) -> Result<(usize, bool), Box<dyn Error>> {
    let dirs = ["a", "b", "c"].map(|d| root.join(d));
    let s = |p: &Path| p.to_str().expect("utf-8 path").to_string();
    tempest(&["backtest", "--config", &s(config), "--out", &s(&dirs[0])])?;
    tempest(&["backtest", "--config", &s(config), "--out", &s(&dirs[1])])?;
    tempest(&["backtest", "--config", &s(&dirs[0].join("manifest.json")), "--out", &s(&dirs[2])])?;
    let [a, b, c] = [files(&dirs[0])?, files(&dirs[1])?, files(&dirs[2])?];
    Ok((a.len(), a == b && a == c))
}

fn c8_determinism() -> Outcome {
    let tmp = tempfile::tempdir()?;
    let hand = tmp.path().join("hand.conf");
    std::fs::write(
        &hand,
        format!(
            "prices = {}\nestimation_months = 1\nholding_months = 1\nbaskets = 2\ncriteria = cum_return\nmin_observations = 3\n",
            fixture("hand_prices.csv").display()
        ),
    )?;
    let model = tmp.path().join("model.conf");
    std::fs::write(
        &model,
        "synthetic_assets = 4\nsynthetic_months = 18\nseed = 7\ncriteria = rr_50_95, cvar95, star95\n",
    )?;
    let (n_hand, same_hand) = identical_runs(&hand, &tmp.path().join("hand"))?;
    let (n_model, same_model) = identical_runs(&model, &tmp.path().join("model"))?;
    let detail = format!(
        "hand fixture: {n_hand} files identical {same_hand}; model-based run: {n_model} files identical {same_model} (two runs plus a manifest rerun each)"
    );
    Ok(Check::new(same_hand && same_model && n_hand > 0 && n_model > 0, detail))
}

/// Published currency 6/6 summary rows: mean monthly return (%) and final
/// wealth, over 234 holding months.
const PUBLISHED: [(&str, &str, f64, f64); 42] = [
    ("Cumul. return", "Winner", 0.0321, 0.0751),
    ("Cumul. return", "Loser", -0.3050, -0.7138),
    ("Cumul. return", "W-L", 0.3371, 0.7889),
    ("Sharpe ratio", "Winner", -0.1120, -0.2620),
    ("Sharpe ratio", "Loser", -0.1464, -0.3426),
    ("Sharpe ratio", "W-L", 0.0344, 0.0806),
    ("CVaR(99%)", "Winner", -0.1505, -0.3522),
    ("CVaR(99%)", "Loser", -0.2853, -0.6677),
    ("CVaR(99%)", "W-L", 0.1348, 0.3155),
    ("CVaR(95%)", "Winner", -0.1715, -0.4012),
    ("CVaR(95%)", "Loser", -0.2184, -0.5110),
    ("CVaR(95%)", "W-L", 0.0469, 0.1098),
    ("CVaR(90%)", "Winner", -0.1743, -0.4078),
    ("CVaR(90%)", "Loser", -0.1944, -0.4549),
    ("CVaR(90%)", "W-L", 0.0201, 0.0471),
    ("STAR-ratio(99%)", "Winner", -0.0701, -0.1641),
    ("STAR-ratio(99%)", "Loser", -0.2364, -0.5531),
    ("STAR-ratio(99%)", "W-L", 0.1662, 0.3890),
    ("STAR-ratio(95%)", "Winner", -0.0603, -0.1412),
    ("STAR-ratio(95%)", "Loser", -0.2706, -0.6331),
    ("STAR-ratio(95%)", "W-L", 0.2102, 0.4920),
    ("STAR-ratio(90%)", "Winner", -0.0397, -0.0929),
    ("STAR-ratio(90%)", "Loser", -0.2888, -0.6758),
    ("STAR-ratio(90%)", "W-L", 0.2491, 0.5829),
    ("R-ratio(99%, 99%)", "Winner", -0.0133, -0.0310),
    ("R-ratio(99%, 99%)", "Loser", -0.3182, -0.7447),
    ("R-ratio(99%, 99%)", "W-L", 0.3050, 0.7137),
    ("R-ratio(95%, 95%)", "Winner", 0.0058, 0.0135),
    ("R-ratio(95%, 95%)", "Loser", -0.3549, -0.8305),
    ("R-ratio(95%, 95%)", "W-L", 0.3607, 0.8441),
    ("R-ratio(90%, 90%)", "Winner", -0.0144, -0.0337),
    ("R-ratio(90%, 90%)", "Loser", -0.3773, -0.8830),
    ("R-ratio(90%, 90%)", "W-L", 0.3629, 0.8492),
    ("R-ratio(50%, 99%)", "Winner", 0.0737, 0.1725),
    ("R-ratio(50%, 99%)", "Loser", -0.4499, -1.0529),
    ("R-ratio(50%, 99%)", "W-L", 0.5237, 1.2254),
    ("R-ratio(50%, 95%)", "Winner", 0.0722, 0.1690),
    ("R-ratio(50%, 95%)", "Loser", -0.4370, -1.0225),
    ("R-ratio(50%, 95%)", "W-L", 0.5092, 1.1916),
    ("R-ratio(50%, 90%)", "Winner", 0.0402, 0.0940),
    ("R-ratio(50%, 90%)", "Loser", -0.3994, -0.9346),
    ("R-ratio(50%, 90%)", "W-L", 0.4395, 1.0285),
];

fn c9_final_wealth_definition() -> Outcome {
    let months = 234.0;
    // four-decimal rounding of both printed numbers
    let bound = 0.00005 * months / 100.0 + 0.00005;
    let mut worst = 0.0_f64;
    let mut worst_compound = 0.0_f64;
    for (_, _, mean_pct, fw) in PUBLISHED {
        worst = worst.max((mean_pct * months / 100.0 - fw).abs());
        worst_compound = worst_compound.max(((1.0 + mean_pct / 100.0).powf(months) - 1.0 - fw).abs());
    }
    let (_, _, m, fw) = PUBLISHED[2];
    let compounded = (1.0 + m / 100.0).powf(months) - 1.0;

    // the implemented definition obeys the same relation
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let series: Vec<f64> = (0..234).map(|_| rng.random_range(-0.05..0.05)).collect();
    let s = monthly_summary(&series)?;
    let own = (s.mean_pct * s.months as f64 / 100.0 - s.final_wealth).abs();

    let pass = worst <= bound && worst_compound > bound && own <= 1e-12;
    let detail = format!(
        "42 rows: max |mean*234/100 - FW| {worst:.2e} (rounding bound {bound:.2e}); {m} -> {:.4} vs printed {fw}; compounding gives {compounded:.4} (worst row miss {worst_compound:.2e}); implementation gap {own:.1e}",
        m * months / 100.0
    );
    Ok(Check::new(pass, detail))
}

fn main() -> ExitCode {
    let criteria: [(usize, &str, fn() -> Outcome); 9] = [
        (1, "CTS correctness", c1_cts_correctness),
        (2, "CVaR oracle", c2_cvar_oracle),
        (3, "forecast transport", c3_forecast_transport),
        (4, "MLE recovery", c4_mle_recovery),
        (5, "backtest oracle", c5_backtest_oracle),
        (6, "Carhart OLS", c6_carhart),
        (7, "tail-drift momentum claim", c7_tail_drift_claim),
        (8, "determinism", c8_determinism),
        (9, "final-wealth definition", c9_final_wealth_definition),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let started = Instant::now();
        let check = run().unwrap_or_else(|e| Check::new(false, format!("error: {e}")));
        println!(
            "criterion {id} ({name}): {} [{:.1}s] {}",
            if check.pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64(),
            check.detail
        );
        failed += !check.pass as usize;
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    }
}
