use chrono::NaiveDate;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tempest_core::analytics::{
    carhart, carhart_design, ks_distance, monthly_summary, risk_stats, AnalyticsError, FactorReport,
};
use tempest_core::arma_garch::{simulate, ArmaGarchOptions, ArmaGarchParams};
use tempest_core::cts::{standardize, CtsDistribution};
use tempest_core::data_ingest::FactorRow;
use tempest_core::stats::EmptySample;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    Distribution::<f64>::sample(&StandardNormal, rng)
}

fn random_factors(n: usize, rng: &mut ChaCha8Rng) -> Vec<FactorRow> {
    (0..n)
        .map(|i| FactorRow {
            date: NaiveDate::from_ymd_opt(1990 + (i / 12) as i32, (i % 12) as u32 + 1, 1).unwrap(),
            mkt: 4.0 * normal(rng),
            smb: 2.5 * normal(rng),
            hml: 2.5 * normal(rng),
            mom: 3.5 * normal(rng),
            rf: 0.3,
        })
        .collect()
}

/// OLS by normal equations, inverting `XᵀX` with Gauss–Jordan elimination.
fn normal_equations(y: &[f64], factors: &[FactorRow]) -> Vec<f64> {
    let rows: Vec<[f64; 5]> = factors.iter().map(|f| [1.0, f.mkt, f.smb, f.hml, f.mom]).collect();
    let mut a = [[0.0; 10]; 5];
    for i in 0..5 {
        for j in 0..5 {
            a[i][j] = rows.iter().map(|r| r[i] * r[j]).sum();
        }
        a[i][5 + i] = 1.0;
    }
    for col in 0..5 {
        let pivot = (col..5).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs())).unwrap();
        a.swap(col, pivot);
        let d = a[col][col];
        for v in a[col].iter_mut() {
            *v /= d;
        }
        for r in 0..5 {
            if r != col {
                let m = a[r][col];
                for c in 0..10 {
                    a[r][c] -= m * a[col][c];
                }
            }
        }
    }
    let xty: Vec<f64> = (0..5).map(|j| rows.iter().zip(y).map(|(r, v)| r[j] * v).sum()).collect();
    (0..5).map(|i| (0..5).map(|j| a[i][5 + j] * xty[j]).sum()).collect()
}

fn noisy_returns(factors: &[FactorRow], rng: &mut ChaCha8Rng) -> Vec<f64> {
    factors
        .iter()
        .map(|f| 0.4 + 0.3 * f.mkt - 0.2 * f.smb + 0.1 * f.hml + 0.6 * f.mom + 2.0 * normal(rng))
        .collect()
}

fn estimates(r: &FactorReport) -> Vec<f64> {
    r.coefficients.iter().map(|c| c.estimate).collect()
}

#[test]
fn qr_agrees_with_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [12, 60, 234] {
        let f = random_factors(n, &mut rng);
        let y = noisy_returns(&f, &mut rng);
        let qr = estimates(&carhart(&y, &f).unwrap());
        let ne = normal_equations(&y, &f);
        for (a, b) in qr.iter().zip(&ne) {
            assert!((a - b).abs() < 1e-10, "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn residuals_are_orthogonal_to_the_design() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let f = random_factors(120, &mut rng);
    let y = noisy_returns(&f, &mut rng);
    let beta = estimates(&carhart(&y, &f).unwrap());
    let x = carhart_design(&f);
    let resid: Vec<f64> = (0..y.len()).map(|i| y[i] - (0..5).map(|j| x[(i, j)] * beta[j]).sum::<f64>()).collect();
    for j in 0..5 {
        let dot: f64 = (0..y.len()).map(|i| x[(i, j)] * resid[i]).sum();
        let scale: f64 = (0..y.len()).map(|i| (x[(i, j)] * resid[i]).abs()).sum();
        assert!(dot.abs() < 1e-8 * scale, "column {j}: {dot}");
    }
}

#[test]
fn exact_linear_track() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = random_factors(48, &mut rng);
    let y: Vec<f64> = f.iter().map(|r| 0.5 * r.mkt).collect();
    let rep = carhart(&y, &f).unwrap();
    assert!((rep.beta("mkt").unwrap() - 0.5).abs() < 1e-12);
    for name in ["alpha", "smb", "hml", "mom"] {
        assert!(rep.beta(name).unwrap().abs() < 1e-12, "{name}");
    }
    assert_eq!(rep.r_squared, 1.0);
}

#[test]
fn pure_noise_rarely_looks_significant() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let trials = 2000;
    let mut clean = 0;
    let mut r2 = 0.0;
    for _ in 0..trials {
        let f = random_factors(60, &mut rng);
        let y: Vec<f64> = (0..60).map(|_| normal(&mut rng)).collect();
        let rep = carhart(&y, &f).unwrap();
        r2 += rep.r_squared / trials as f64;
        if rep.coefficients[1..].iter().all(|c| !c.significant_1pct) {
            clean += 1;
        }
        for c in &rep.coefficients {
            assert!(!c.significant_1pct || c.significant_5pct);
            let p = c.p_value.unwrap();
            assert_eq!(c.significant_5pct, p < 0.05);
        }
    }
    // E[R²] = 4/59 under the null
    assert!((r2 - 4.0 / 59.0).abs() < 0.01, "mean R² {r2}");
    assert!(clean as f64 >= 0.95 * trials as f64, "{clean} of {trials}");
}

#[test]
fn design_problems_are_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut f = random_factors(30, &mut rng);
    for r in f.iter_mut() {
        r.hml = 2.0 * r.smb - r.mkt;
    }
    let y: Vec<f64> = (0..30).map(|_| normal(&mut rng)).collect();
    assert_eq!(carhart(&y, &f), Err(AnalyticsError::RankDeficientDesign));
    let f = random_factors(10, &mut rng);
    assert!(matches!(carhart(&y[..10], &f), Err(AnalyticsError::TooFewSamples { got: 10, need: 11 })));
}

#[test]
fn normal_kurtosis_is_near_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let xs: Vec<f64> = (0..1_000_000).map(|_| 0.01 * normal(&mut rng)).collect();
    let s = monthly_summary(&xs).unwrap();
    assert!(s.excess_kurtosis.abs() < 0.03, "{}", s.excess_kurtosis);
    assert!(s.skewness.abs() < 0.01);
}

#[test]
fn ks_constructions() {
    let uniform = |x: f64| x.clamp(0.0, 1.0);
    assert_eq!(ks_distance(&[0.5], uniform).unwrap(), 0.5);
    let n = 40;
    let q: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
    assert!((ks_distance(&q, uniform).unwrap() - 0.5 / n as f64).abs() < 1e-15);
    assert_eq!(ks_distance(&[], uniform), Err(EmptySample));
}

#[test]
fn ks_of_own_draws_is_small() {
    let law = standardize(1.2, 1.8, 0.9).unwrap();
    let d = CtsDistribution::new(law.to_cts()).unwrap();
    let n = 100_000;
    let ks = ks_distance(&d.sample(n, 7), |x| d.cdf(x)).unwrap();
    assert!(ks < 1.5 * 1.36 / (n as f64).sqrt(), "{ks}");
}

fn cts_track(n: usize, seed: u64, shape: (f64, f64, f64)) -> Vec<f64> {
    let law = standardize(shape.0, shape.1, shape.2).unwrap();
    let eps = CtsDistribution::new(law.to_cts()).unwrap().sample(n, seed);
    let p = ArmaGarchParams { c: 2e-4, a: 0.1, b: 0.0, omega: 2e-6, alpha1: 0.08, beta1: 0.9, nu: 8.0 };
    simulate(&p, &eps)
}

#[test]
fn risk_stats_recover_shape() {
    let shape = (1.2, 1.5, 0.8);
    let track = cts_track(50_000, 12, shape);
    let opts = ArmaGarchOptions::default();
    let r = risk_stats(&track, 0.0, &opts).unwrap();
    assert!(!r.student_t_fallback);
    let got = (r.alpha.unwrap(), r.lambda_plus.unwrap(), r.lambda_minus.unwrap());
    for (g, t) in [(got.0, shape.0), (got.1, shape.1), (got.2, shape.2)] {
        assert!(((g - t) / t).abs() < 0.15, "recovered {got:?}, truth {shape:?}");
    }
    assert!(r.cvar95_pct >= r.var95_pct);
    assert!((0.0..=1.0).contains(&r.ks.unwrap()));
    assert!((0.0..=100.0).contains(&r.mdd_pct));
}

#[test]
fn risk_stats_is_pure_and_needs_a_year() {
    let track = cts_track(300, 13, (1.5, 1.0, 1.0));
    let opts = ArmaGarchOptions::default();
    let a = risk_stats(&track, 1e-4, &opts).unwrap();
    let b = risk_stats(&track, 1e-4, &opts).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    assert!(a.cvar95_pct >= a.var95_pct);
    assert!(matches!(
        risk_stats(&track[..251], 0.0, &opts),
        Err(AnalyticsError::TooFewSamples { got: 251, need: 252 })
    ));
}

#[test]
fn rising_track_has_no_drawdown() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let track: Vec<f64> = (0..300).map(|_| rng.random_range(1e-4..2e-3)).collect();
    let r = risk_stats(&track, 0.0, &ArmaGarchOptions::default()).unwrap();
    assert_eq!(r.mdd_pct, 0.0);
}

proptest! {
    #[test]
    fn mean_times_count_is_final_wealth(xs in prop::collection::vec(-0.3..0.3f64, 2..300)) {
        prop_assume!(xs.iter().any(|x| *x != xs[0]));
        let s = monthly_summary(&xs).unwrap();
        let lhs = s.mean_pct * xs.len() as f64;
        prop_assert!((lhs - 100.0 * s.final_wealth).abs() <= 1e-12 * (1.0 + lhs.abs()));
        prop_assert!(s.stdev_pct >= 0.0);
    }
}
