//! Report statistics: monthly summaries, model-based risk statistics and the
//! Carhart four-factor regression.

use chrono::{Datelike, NaiveDate};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::arma_garch::{fit, ArmaGarchError, ArmaGarchOptions, Forecast, Innovations};
use crate::cts::CtsError;
use crate::data_ingest::FactorRow;
use crate::reward_risk::{mdd, sharpe, wealth_path};

pub use crate::stats::ks_distance;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("too few observations: got {got}, need {need}")]
    TooFewSamples { got: usize, need: usize },
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),
    #[error("design matrix is rank deficient")]
    RankDeficientDesign,
    #[error("misaligned dates: {0}")]
    Misaligned(String),
    #[error(transparent)]
    Fit(#[from] ArmaGarchError),
    #[error(transparent)]
    Model(#[from] CtsError),
}

/// Monthly return statistics; `mean_pct` and `stdev_pct` in percent per month.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonthlySummary {
    pub months: usize,
    pub mean_pct: f64,
    pub stdev_pct: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Sum of the monthly fractional returns.
    pub final_wealth: f64,
}

/// Sample mean, unbiased standard deviation, moment skewness `m₃/m₂^{3/2}` and
/// excess kurtosis `m₄/m₂² − 3` of monthly fractional returns.
pub fn monthly_summary(returns: &[f64]) -> Result<MonthlySummary, AnalyticsError> {
    let n = returns.len();
    if n < 2 {
        return Err(AnalyticsError::TooFewSamples { got: n, need: 2 });
    }
    let nf = n as f64;
    let mean = returns.iter().sum::<f64>() / nf;
    let central = |k: i32| returns.iter().map(|r| (r - mean).powi(k)).sum::<f64>() / nf;
    let m2 = central(2);
    if m2 == 0.0 || crate::stats::is_constant(returns) {
        return Err(AnalyticsError::DegenerateSeries("zero dispersion; skewness undefined".into()));
    }
    Ok(MonthlySummary {
        months: n,
        mean_pct: 100.0 * mean,
        stdev_pct: 100.0 * (m2 * nf / (nf - 1.0)).sqrt(),
        skewness: central(3) / m2.powf(1.5),
        excess_kurtosis: central(4) / (m2 * m2) - 3.0,
        final_wealth: returns.iter().sum(),
    })
}

/// Running sum of monthly returns, the cumulative series behind final wealth.
pub fn cumulative_monthly(returns: &[f64]) -> Vec<f64> {
    returns
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r;
            Some(*acc)
        })
        .collect()
}

/// Model-based risk statistics of a daily return track; percentages are daily.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskStats {
    pub observations: usize,
    pub alpha: Option<f64>,
    pub lambda_plus: Option<f64>,
    pub lambda_minus: Option<f64>,
    pub ks: Option<f64>,
    pub daily_sharpe: f64,
    pub var95_pct: f64,
    pub cvar95_pct: f64,
    pub mdd_pct: f64,
    pub student_t_fallback: bool,
}

pub const RISK_STATS_MIN_OBSERVATIONS: usize = 252;

/// Fits the ARMA-GARCH-CTS model to the whole track and reports its one-step
/// Sharpe ratio, VaR and CVaR at 95%, with the drawdown of the compounded path.
pub fn risk_stats(
    daily_returns: &[f64],
    rf_daily: f64,
    options: &ArmaGarchOptions,
) -> Result<RiskStats, AnalyticsError> {
    let n = daily_returns.len();
    if n < RISK_STATS_MIN_OBSERVATIONS {
        return Err(AnalyticsError::TooFewSamples { got: n, need: RISK_STATS_MIN_OBSERVATIONS });
    }
    let f = fit(daily_returns, options)?;
    let forecast = Forecast::new(&f)?;
    let cts = match f.innovations {
        Innovations::Cts(p) => Some(p),
        Innovations::StudentT { .. } => None,
    };
    Ok(RiskStats {
        observations: n,
        alpha: cts.map(|p| p.alpha()),
        lambda_plus: cts.map(|p| p.lambda_plus()),
        lambda_minus: cts.map(|p| p.lambda_minus()),
        ks: f.ks,
        daily_sharpe: sharpe(forecast.mean - rf_daily, forecast.sigma)
            .map_err(|e| AnalyticsError::DegenerateSeries(e.to_string()))?,
        var95_pct: 100.0 * forecast.var(0.95, 0.0)?,
        cvar95_pct: 100.0 * forecast.cvar(0.95, 0.0)?,
        mdd_pct: 100.0 * mdd(&wealth_path(daily_returns)).expect("non-empty path"),
        student_t_fallback: cts.is_none(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    /// `None` when the standard error is zero (exact fit).
    pub t_stat: Option<f64>,
    pub p_value: Option<f64>,
    pub significant_1pct: bool,
    pub significant_5pct: bool,
}

impl Coefficient {
    /// `**` at 1%, `*` at 5%.
    pub fn stars(&self) -> &'static str {
        if self.significant_1pct {
            "**"
        } else if self.significant_5pct {
            "*"
        } else {
            ""
        }
    }
}

/// Carhart regression of monthly returns (percent) on MKT, SMB, HML and MOM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorReport {
    pub observations: usize,
    /// Intercept, then the four factor loadings.
    pub coefficients: Vec<Coefficient>,
    pub r_squared: f64,
}

impl FactorReport {
    pub fn alpha_pct(&self) -> f64 {
        self.coefficients[0].estimate
    }

    pub fn beta(&self, name: &str) -> Option<f64> {
        self.coefficients.iter().find(|c| c.name == name).map(|c| c.estimate)
    }
}

pub const FACTOR_NAMES: [&str; 5] = ["alpha", "mkt", "smb", "hml", "mom"];

pub fn carhart_design(factors: &[FactorRow]) -> DMatrix<f64> {
    DMatrix::from_fn(factors.len(), 5, |i, j| {
        let f = &factors[i];
        [1.0, f.mkt, f.smb, f.hml, f.mom][j]
    })
}

/// OLS with intercept via Householder QR; classical standard errors and
/// two-sided t-tests.
pub fn carhart(returns_pct: &[f64], factors: &[FactorRow]) -> Result<FactorReport, AnalyticsError> {
    let (n, k) = (returns_pct.len(), FACTOR_NAMES.len());
    if factors.len() != n {
        return Err(AnalyticsError::Misaligned(format!("{n} returns but {} factor rows", factors.len())));
    }
    if n < k + 6 {
        return Err(AnalyticsError::TooFewSamples { got: n, need: k + 6 });
    }
    let x = carhart_design(factors);
    let y = DVector::from_column_slice(returns_pct);
    let qr = x.clone().qr();
    let r = qr.r();
    let diag_max = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..k).any(|i| r[(i, i)].abs() <= 1e-10 * diag_max.max(f64::MIN_POSITIVE)) {
        return Err(AnalyticsError::RankDeficientDesign);
    }
    let qty = qr.q().transpose() * &y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or(AnalyticsError::RankDeficientDesign)?;
    let resid = &y - &x * &beta;
    let rss = resid.norm_squared();
    let mean = y.mean();
    let tss = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let df = (n - k) as f64;
    let s2 = rss / df;
    // (XᵀX)⁻¹ = R⁻¹R⁻ᵀ
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or(AnalyticsError::RankDeficientDesign)?;
    let cov_unscaled = &r_inv * r_inv.transpose();
    let t_dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    let coefficients = (0..k)
        .map(|j| {
            let se = (s2 * cov_unscaled[(j, j)]).sqrt();
            let t = (se > 0.0).then(|| beta[j] / se);
            let p = t.map(|t| 2.0 * t_dist.sf(t.abs()));
            Coefficient {
                name: FACTOR_NAMES[j].to_string(),
                estimate: beta[j],
                std_error: se,
                t_stat: t,
                p_value: p,
                significant_1pct: p.is_some_and(|p| p < 0.01),
                significant_5pct: p.is_some_and(|p| p < 0.05),
            }
        })
        .collect();
    let r_squared = if tss > 0.0 { (1.0 - rss / tss).clamp(0.0, 1.0) } else { 0.0 };
    Ok(FactorReport { observations: n, coefficients, r_squared })
}

/// Factor rows for each month of a track. Factor months must be strictly
/// increasing and cover every track month.
pub fn align_factors(months: &[NaiveDate], factors: &[FactorRow]) -> Result<Vec<FactorRow>, AnalyticsError> {
    for w in factors.windows(2) {
        if w[1].month() <= w[0].month() {
            return Err(AnalyticsError::Misaligned(format!(
                "factor month {}-{:02} follows {}-{:02}",
                w[1].month().0,
                w[1].month().1,
                w[0].month().0,
                w[0].month().1
            )));
        }
    }
    months
        .iter()
        .map(|m| {
            let key = (m.year(), m.month());
            factors
                .binary_search_by(|f| f.month().cmp(&key))
                .map(|i| factors[i])
                .map_err(|_| AnalyticsError::Misaligned(format!("no factor row for {}-{:02}", key.0, key.1)))
        })
        .collect()
}
