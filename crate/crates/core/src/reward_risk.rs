//! Reward-risk ranking criteria.
//!
//! All model-based measures use the one-step ARMA-GARCH-CTS forecast at the
//! end of the estimation window. CVaR values are positive loss numbers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arma_garch::{fit, ArmaGarchError, ArmaGarchFit, ArmaGarchOptions, Forecast};
use crate::cts::{CtsError, FitOptions, StdCtsParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardRiskError {
    #[error("standard deviation of excess returns is zero")]
    ZeroDeviation,
    #[error("risk measure is zero")]
    ZeroRisk,
    #[error("empty path")]
    EmptyPath,
    #[error(transparent)]
    Model(#[from] CtsError),
}

/// `E(r − r_f) / σ(r − r_f)`.
pub fn sharpe(expected_excess: f64, stdev_excess: f64) -> Result<f64, RewardRiskError> {
    if stdev_excess == 0.0 {
        return Err(RewardRiskError::ZeroDeviation);
    }
    Ok(expected_excess / stdev_excess)
}

/// `E(r − r_f) / CVaR`.
pub fn star_ratio(expected_excess: f64, cvar: f64) -> Result<f64, RewardRiskError> {
    if cvar == 0.0 {
        return Err(RewardRiskError::ZeroRisk);
    }
    Ok(expected_excess / cvar)
}

/// Rachev ratio `CVaR_{upper}(r_f − r) / CVaR_{lower}(r − r_f)`, both
/// arguments confidence levels `1 − η` and `1 − ζ`.
pub fn r_ratio(
    forecast: &Forecast,
    rf: f64,
    upper_confidence: f64,
    lower_confidence: f64,
) -> Result<f64, RewardRiskError> {
    let gain = forecast.cvar_reflected(upper_confidence, rf)?;
    let loss = forecast.cvar(lower_confidence, rf)?;
    if loss == 0.0 {
        return Err(RewardRiskError::ZeroRisk);
    }
    if gain < 0.0 || loss < 0.0 {
        log::debug!("R-ratio with a negative tail CVaR: gain {gain}, loss {loss}");
    }
    Ok(gain / loss)
}

/// [`r_ratio`] straight from a fit.
pub fn r_ratio_for_fit(
    fit: &ArmaGarchFit,
    rf: f64,
    upper_confidence: f64,
    lower_confidence: f64,
) -> Result<f64, RewardRiskError> {
    r_ratio(&Forecast::new(fit)?, rf, upper_confidence, lower_confidence)
}

/// Largest peak-to-trough decline `1 − W_τ / max_{t≤τ} W_t` of a wealth path.
pub fn mdd(path: &[f64]) -> Result<f64, RewardRiskError> {
    let first = *path.first().ok_or(RewardRiskError::EmptyPath)?;
    let mut peak = first;
    let mut worst = 0.0_f64;
    for &w in path {
        peak = peak.max(w);
        worst = worst.max(1.0 - w / peak);
    }
    Ok(worst)
}

/// Wealth path `1, 1 + r₁, (1 + r₁)(1 + r₂), …`.
pub fn wealth_path(returns: &[f64]) -> Vec<f64> {
    let mut w = 1.0;
    std::iter::once(1.0)
        .chain(returns.iter().map(|r| {
            w *= 1.0 + r;
            w
        }))
        .collect()
}

/// `∏(1 + r) − 1`.
pub fn cumulative_return(returns: &[f64]) -> f64 {
    returns.iter().map(|r| 1.0 + r).product::<f64>() - 1.0
}

/// The ranking criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    CumReturn,
    Sharpe,
    Cvar99,
    Cvar95,
    Cvar90,
    Star99,
    Star95,
    Star90,
    #[serde(rename = "rr_99_99")]
    Rr99_99,
    #[serde(rename = "rr_95_95")]
    Rr95_95,
    #[serde(rename = "rr_90_90")]
    Rr90_90,
    #[serde(rename = "rr_50_99")]
    Rr50_99,
    #[serde(rename = "rr_50_95")]
    Rr50_95,
    #[serde(rename = "rr_50_90")]
    Rr50_90,
}

impl Criterion {
    pub const ALL: [Criterion; 14] = [
        Criterion::CumReturn,
        Criterion::Sharpe,
        Criterion::Cvar99,
        Criterion::Cvar95,
        Criterion::Cvar90,
        Criterion::Star99,
        Criterion::Star95,
        Criterion::Star90,
        Criterion::Rr99_99,
        Criterion::Rr95_95,
        Criterion::Rr90_90,
        Criterion::Rr50_99,
        Criterion::Rr50_95,
        Criterion::Rr50_90,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Criterion::CumReturn => "cum_return",
            Criterion::Sharpe => "sharpe",
            Criterion::Cvar99 => "cvar99",
            Criterion::Cvar95 => "cvar95",
            Criterion::Cvar90 => "cvar90",
            Criterion::Star99 => "star99",
            Criterion::Star95 => "star95",
            Criterion::Star90 => "star90",
            Criterion::Rr99_99 => "rr_99_99",
            Criterion::Rr95_95 => "rr_95_95",
            Criterion::Rr90_90 => "rr_90_90",
            Criterion::Rr50_99 => "rr_50_99",
            Criterion::Rr50_95 => "rr_50_95",
            Criterion::Rr50_90 => "rr_50_90",
        }
    }

    /// CVaR criteria rank the safest assets first; everything else ranks the
    /// largest value first.
    pub fn higher_is_better(self) -> bool {
        !matches!(self, Criterion::Cvar99 | Criterion::Cvar95 | Criterion::Cvar90)
    }

    /// Whether ranking needs the fitted model.
    pub fn needs_model(self) -> bool {
        self != Criterion::CumReturn
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("unknown criterion '{0}'")]
pub struct UnknownCriterion(pub String);

impl FromStr for Criterion {
    type Err = UnknownCriterion;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.id() == s.trim())
            .ok_or_else(|| UnknownCriterion(s.to_string()))
    }
}

/// Criterion values of one asset over one estimation window. Invalid
/// summaries carry no values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRiskSummary {
    pub asset: String,
    pub window: usize,
    pub valid: bool,
    pub reason: Option<String>,
    pub observations: usize,
    pub cumulative_return: Option<f64>,
    pub sharpe: Option<f64>,
    pub cvar99: Option<f64>,
    pub cvar95: Option<f64>,
    pub cvar90: Option<f64>,
    pub star99: Option<f64>,
    pub star95: Option<f64>,
    pub star90: Option<f64>,
    pub rr_99_99: Option<f64>,
    pub rr_95_95: Option<f64>,
    pub rr_90_90: Option<f64>,
    pub rr_50_99: Option<f64>,
    pub rr_50_95: Option<f64>,
    pub rr_50_90: Option<f64>,
    /// Fitted innovation shape, when the CTS refit succeeded.
    pub cts: Option<StdCtsParams>,
    /// Set when the CTS refit failed and Student-t innovations were used.
    pub student_t_fallback: bool,
}

impl RewardRiskSummary {
    pub fn invalid(asset: &str, window: usize, observations: usize, reason: impl Into<String>) -> Self {
        Self {
            asset: asset.to_string(),
            window,
            valid: false,
            reason: Some(reason.into()),
            observations,
            cumulative_return: None,
            sharpe: None,
            cvar99: None,
            cvar95: None,
            cvar90: None,
            star99: None,
            star95: None,
            star90: None,
            rr_99_99: None,
            rr_95_95: None,
            rr_90_90: None,
            rr_50_99: None,
            rr_50_95: None,
            rr_50_90: None,
            cts: None,
            student_t_fallback: false,
        }
    }

    pub fn value(&self, criterion: Criterion) -> Option<f64> {
        match criterion {
            Criterion::CumReturn => self.cumulative_return,
            Criterion::Sharpe => self.sharpe,
            Criterion::Cvar99 => self.cvar99,
            Criterion::Cvar95 => self.cvar95,
            Criterion::Cvar90 => self.cvar90,
            Criterion::Star99 => self.star99,
            Criterion::Star95 => self.star95,
            Criterion::Star90 => self.star90,
            Criterion::Rr99_99 => self.rr_99_99,
            Criterion::Rr95_95 => self.rr_95_95,
            Criterion::Rr90_90 => self.rr_90_90,
            Criterion::Rr50_99 => self.rr_50_99,
            Criterion::Rr50_95 => self.rr_50_95,
            Criterion::Rr50_90 => self.rr_50_90,
        }
    }
}

/// Whether [`summarize`] fits the model or only computes the cumulative return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SummaryMode {
    #[default]
    Full,
    ReturnsOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryOptions {
    pub mode: SummaryMode,
    pub model: ArmaGarchOptions,
}

impl Default for SummaryOptions {
    /// Window fits use [`FitOptions::coarse`] for the innovation law.
    fn default() -> Self {
        Self {
            mode: SummaryMode::Full,
            model: ArmaGarchOptions { cts: FitOptions::coarse(), ..ArmaGarchOptions::default() },
        }
    }
}

/// Every criterion for one asset window; `rf` is the per-day risk-free rate.
/// Failures are recorded in the summary, never returned.
pub fn summarize(
    asset: &str,
    window: usize,
    returns: &[f64],
    rf: f64,
    options: &SummaryOptions,
) -> RewardRiskSummary {
    let n = returns.len();
    if n < options.model.min_observations {
        return RewardRiskSummary::invalid(
            asset,
            window,
            n,
            ArmaGarchError::TooFewSamples { got: n, need: options.model.min_observations }.to_string(),
        );
    }
    if crate::stats::is_constant(returns) {
        return RewardRiskSummary::invalid(asset, window, n, "degenerate series: constant returns");
    }
    let mut summary = RewardRiskSummary::invalid(asset, window, n, "");
    summary.cumulative_return = Some(cumulative_return(returns));
    if options.mode == SummaryMode::ReturnsOnly {
        summary.valid = true;
        summary.reason = None;
        return summary;
    }
    let fitted = match fit(returns, &options.model) {
        Ok(f) => f,
        Err(e) => return RewardRiskSummary::invalid(asset, window, n, e.to_string()),
    };
    match fill_model_criteria(&mut summary, &fitted, rf) {
        Ok(()) => {
            summary.valid = true;
            summary.reason = None;
            summary
        }
        Err(e) => RewardRiskSummary::invalid(asset, window, n, e.to_string()),
    }
}

fn fill_model_criteria(
    s: &mut RewardRiskSummary,
    fit: &ArmaGarchFit,
    rf: f64,
) -> Result<(), RewardRiskError> {
    let forecast = Forecast::new(fit)?;
    let excess = forecast.mean - rf;
    s.sharpe = Some(sharpe(excess, forecast.sigma)?);
    let cvar99 = forecast.cvar(0.99, 0.0)?;
    let cvar95 = forecast.cvar(0.95, 0.0)?;
    let cvar90 = forecast.cvar(0.90, 0.0)?;
    s.star99 = Some(star_ratio(excess, cvar99)?);
    s.star95 = Some(star_ratio(excess, cvar95)?);
    s.star90 = Some(star_ratio(excess, cvar90)?);
    s.cvar99 = Some(cvar99);
    s.cvar95 = Some(cvar95);
    s.cvar90 = Some(cvar90);
    s.rr_99_99 = Some(r_ratio(&forecast, rf, 0.99, 0.99)?);
    s.rr_95_95 = Some(r_ratio(&forecast, rf, 0.95, 0.95)?);
    s.rr_90_90 = Some(r_ratio(&forecast, rf, 0.90, 0.90)?);
    s.rr_50_99 = Some(r_ratio(&forecast, rf, 0.50, 0.99)?);
    s.rr_50_95 = Some(r_ratio(&forecast, rf, 0.50, 0.95)?);
    s.rr_50_90 = Some(r_ratio(&forecast, rf, 0.50, 0.90)?);
    s.cts = match fit.innovations {
        crate::arma_garch::Innovations::Cts(p) => Some(p),
        _ => None,
    };
    s.student_t_fallback = !fit.innovations.is_cts();
    Ok(())
}
