//! Reward-risk momentum backtesting on ARMA(1,1)-GARCH(1,1) models with
//! classical tempered stable (CTS) innovations.
//!
//! The crate is organised bottom-up:
//!
//! * [`cts`] – the CTS law: characteristic function, FFT density grid,
//!   quantiles, VaR/CVaR, cumulants, standardisation, MLE and sampling.
//! * [`arma_garch`] – two-stage ARMA-GARCH-CTS estimation and one-step
//!   forecasts of mean, volatility and CVaR.
//! * [`reward_risk`] – Sharpe, CVaR, STAR and Rachev ratios, drawdown, and
//!   the per-asset window summary used for ranking.
//! * [`momentum`] – non-overlapping J/K schedules, basket ranking and
//!   winner-minus-loser return tracks.
//! * [`analytics`] – monthly summary statistics, model risk statistics and
//!   Carhart four-factor regressions.
//! * [`data_ingest`] – CSV loaders for prices, index membership, risk-free
//!   yields and factor files.
//! * [`synthetic`] – seeded synthetic universes.

pub mod analytics;
pub mod arma_garch;
pub mod cts;
pub mod data_ingest;
pub mod momentum;
pub mod optimize;
pub mod reward_risk;
pub mod stats;
pub mod synthetic;

/// Minimum number of observations for a window summary or a model fit.
pub const MIN_OBSERVATIONS: usize = 21;

/// Trading days per year used to convert annual yields to daily rates.
pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;
