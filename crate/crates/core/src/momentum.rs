//! Non-overlapping J/K momentum portfolios ranked by a reward-risk criterion.
//!
//! Every K months a portfolio is formed from the J months before it: assets
//! are ranked into baskets, the top basket is bought and the bottom basket
//! sold short with equal formation weights, and both legs are held (buy and
//! hold) until the next formation date.

use std::collections::BTreeMap;
use std::ops::Range;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data_ingest::{members_on, riskfree_daily, MembershipHistory, ReturnPanel, RiskFreeSeries};
use crate::reward_risk::{summarize, Criterion, RewardRiskSummary, SummaryMode, SummaryOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MomentumError {
    #[error("calendar spans {months} months, need at least {need}")]
    CalendarTooShort { months: usize, need: usize },
    #[error("{got} rankable assets for {baskets} baskets")]
    TooFewAssets { got: usize, baskets: usize },
    #[error("no return data for {0}")]
    MissingData(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestConfig {
    pub estimation_months: usize,
    pub holding_months: usize,
    pub n_baskets: usize,
    pub criterion: Criterion,
    pub summary: SummaryOptions,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            estimation_months: 6,
            holding_months: 6,
            n_baskets: 3,
            criterion: Criterion::Rr50_95,
            summary: SummaryOptions::default(),
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<(), MomentumError> {
        if self.estimation_months == 0 || self.holding_months == 0 {
            return Err(MomentumError::InvalidConfig("estimation and holding months must be ≥ 1".into()));
        }
        if self.n_baskets < 2 {
            return Err(MomentumError::InvalidConfig("at least 2 baskets are needed".into()));
        }
        Ok(())
    }
}

/// One formation/holding pair, as day-index ranges into the calendar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub id: usize,
    pub estimation: Range<usize>,
    pub holding: Range<usize>,
    /// Last trading day of the estimation window.
    pub formation_date: NaiveDate,
}

/// Start index of each calendar month in a sorted calendar, plus the end.
fn month_starts(calendar: &[NaiveDate]) -> Vec<usize> {
    let mut starts: Vec<usize> = (0..calendar.len())
        .filter(|&i| i == 0 || (calendar[i].year(), calendar[i].month()) != (calendar[i - 1].year(), calendar[i - 1].month()))
        .collect();
    starts.push(calendar.len());
    starts
}

/// Holding windows of `K` months tiling the calendar after the first `J`
/// months, each preceded by its `J`-month estimation window.
pub fn build_schedule(calendar: &[NaiveDate], config: &BacktestConfig) -> Result<Vec<Window>, MomentumError> {
    config.validate()?;
    let starts = month_starts(calendar);
    let months = starts.len() - 1;
    let (j, k) = (config.estimation_months, config.holding_months);
    if months < j + k {
        return Err(MomentumError::CalendarTooShort { months, need: j + k });
    }
    Ok((0..(months - j) / k)
        .map(|id| {
            let h0 = j + id * k;
            let estimation = starts[h0 - j]..starts[h0];
            Window {
                id,
                formation_date: calendar[estimation.end - 1],
                estimation,
                holding: starts[h0]..starts[h0 + k],
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingBasket {
    pub window: usize,
    /// 0 is the winner basket.
    pub index: usize,
    pub members: Vec<String>,
    pub weight: f64,
}

/// Ranks valid summaries into `n_baskets` baskets, winners first. Basket sizes
/// differ by at most one, larger baskets on the winner side; ties go to the
/// lexicographically smaller asset id.
pub fn rank(
    summaries: &[RewardRiskSummary],
    criterion: Criterion,
    n_baskets: usize,
) -> Result<Vec<RankingBasket>, MomentumError> {
    let mut scored: Vec<(&str, f64, usize)> = summaries
        .iter()
        .filter(|s| s.valid)
        .filter_map(|s| {
            s.value(criterion)
                .filter(|v| v.is_finite())
                .map(|v| (s.asset.as_str(), v, s.window))
        })
        .collect();
    if n_baskets == 0 || scored.len() < n_baskets {
        return Err(MomentumError::TooFewAssets { got: scored.len(), baskets: n_baskets });
    }
    let better_first = criterion.higher_is_better();
    scored.sort_by(|a, b| {
        let by_value = if better_first { b.1.total_cmp(&a.1) } else { a.1.total_cmp(&b.1) };
        by_value.then_with(|| a.0.cmp(b.0))
    });
    let window = scored[0].2;
    let (base, extra) = (scored.len() / n_baskets, scored.len() % n_baskets);
    let mut rest = scored.as_slice();
    Ok((0..n_baskets)
        .map(|index| {
            let size = base + usize::from(index < extra);
            let (take, tail) = rest.split_at(size);
            rest = tail;
            RankingBasket {
                window,
                index,
                members: take.iter().map(|(a, _, _)| a.to_string()).collect(),
                weight: 1.0 / size as f64,
            }
        })
        .collect())
}

/// Daily returns of an equally weighted buy-and-hold portfolio. Missing
/// returns count as zero: the position is carried at its last price.
pub fn buy_and_hold(member_returns: &[Vec<Option<f64>>]) -> Vec<f64> {
    let n = member_returns.first().map_or(0, Vec::len);
    let mut values = vec![1.0 / member_returns.len() as f64; member_returns.len()];
    (0..n)
        .map(|t| {
            let before: f64 = values.iter().sum();
            for (v, r) in values.iter_mut().zip(member_returns) {
                *v *= 1.0 + r[t].unwrap_or(0.0);
            }
            values.iter().sum::<f64>() / before - 1.0
        })
        .collect()
}

/// Winner, loser and winner-minus-loser daily returns over a holding window.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub winner: Vec<f64>,
    pub loser: Vec<f64>,
    pub wml: Vec<f64>,
}

pub fn realize(
    winner: &RankingBasket,
    loser: &RankingBasket,
    returns: &ReturnPanel,
    holding: Range<usize>,
) -> Result<Fragment, MomentumError> {
    let leg = |basket: &RankingBasket| -> Result<Vec<f64>, MomentumError> {
        let series = basket
            .members
            .iter()
            .map(|m| {
                let a = returns.ticker_index(m).ok_or_else(|| MomentumError::MissingData(m.clone()))?;
                Ok(returns.returns[a][holding.clone()].to_vec())
            })
            .collect::<Result<Vec<_>, MomentumError>>()?;
        Ok(buy_and_hold(&series))
    };
    let w = leg(winner)?;
    let l = leg(loser)?;
    let wml = w.iter().zip(&l).map(|(a, b)| a - b).collect();
    Ok(Fragment { winner: w, loser: l, wml })
}

/// Diagnostics for one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub id: usize,
    pub formation_date: NaiveDate,
    pub estimation_start: NaiveDate,
    pub holding_start: NaiveDate,
    pub holding_end: NaiveDate,
    pub eligible: usize,
    pub valid: usize,
    pub student_t_fallbacks: usize,
    pub skipped: Option<String>,
    pub baskets: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioTrack {
    pub criterion: Criterion,
    pub dates: Vec<NaiveDate>,
    pub winner: Vec<f64>,
    pub loser: Vec<f64>,
    pub wml: Vec<f64>,
    /// First calendar day of each month.
    pub months: Vec<NaiveDate>,
    pub monthly_winner: Vec<f64>,
    pub monthly_loser: Vec<f64>,
    /// `monthly_winner − monthly_loser`.
    pub monthly_wml: Vec<f64>,
    pub windows: Vec<WindowRecord>,
}

/// Calendar-month compounding of a daily series: `(month, return)` pairs.
pub fn monthly_compound(dates: &[NaiveDate], daily: &[f64]) -> Vec<(NaiveDate, f64)> {
    let mut out: Vec<(NaiveDate, f64)> = Vec::new();
    for (d, r) in dates.iter().zip(daily) {
        let month = d.with_day(1).expect("day 1 exists");
        match out.last_mut() {
            Some((m, acc)) if *m == month => *acc = (1.0 + *acc) * (1.0 + r) - 1.0,
            _ => out.push((month, *r)),
        }
    }
    out
}

impl PortfolioTrack {
    fn assemble(criterion: Criterion, dates: Vec<NaiveDate>, frag: Fragment, windows: Vec<WindowRecord>) -> Self {
        let w = monthly_compound(&dates, &frag.winner);
        let l = monthly_compound(&dates, &frag.loser);
        Self {
            criterion,
            months: w.iter().map(|(m, _)| *m).collect(),
            monthly_winner: w.iter().map(|(_, r)| *r).collect(),
            monthly_loser: l.iter().map(|(_, r)| *r).collect(),
            monthly_wml: w.iter().zip(&l).map(|((_, a), (_, b))| a - b).collect(),
            dates,
            winner: frag.winner,
            loser: frag.loser,
            wml: frag.wml,
            windows,
        }
    }
}

/// Inputs of a backtest.
#[derive(Debug, Clone, PartialEq)]
pub struct Universe {
    pub returns: ReturnPanel,
    /// `None`: every ticker is always a member.
    pub membership: Option<MembershipHistory>,
    /// `None`: zero risk-free rate.
    pub riskfree: Option<RiskFreeSeries>,
}

/// Tracks for several criteria together with the per-window summaries they
/// share, ordered by window then asset.
#[derive(Debug, Clone, PartialEq)]
pub struct Backtest {
    pub windows: Vec<Window>,
    pub summaries: Vec<RewardRiskSummary>,
    pub tracks: Vec<PortfolioTrack>,
}

/// Tracks for several criteria sharing one set of per-window summaries.
pub fn run_backtest_multi(
    universe: &Universe,
    config: &BacktestConfig,
    criteria: &[Criterion],
) -> Result<Vec<PortfolioTrack>, MomentumError> {
    Ok(backtest(universe, config, criteria)?.tracks)
}

pub fn backtest(universe: &Universe, config: &BacktestConfig, criteria: &[Criterion]) -> Result<Backtest, MomentumError> {
    let ret = &universe.returns;
    let windows = build_schedule(&ret.dates, config)?;
    let mut summary_options = config.summary.clone();
    if criteria.iter().all(|c| !c.needs_model()) {
        summary_options.mode = SummaryMode::ReturnsOnly;
    }

    // eligibility and risk-free rate per window
    let mut prepared: Vec<(Vec<usize>, Result<f64, String>)> = Vec::with_capacity(windows.len());
    for w in &windows {
        let eligible: Vec<usize> = match &universe.membership {
            Some(h) => {
                let members = members_on(h, w.formation_date);
                (0..ret.tickers.len()).filter(|&a| members.contains(&ret.tickers[a])).collect()
            }
            None => (0..ret.tickers.len()).collect(),
        };
        let rf = match &universe.riskfree {
            Some(s) => riskfree_daily(s, w.formation_date).map_err(|e| e.to_string()),
            None => Ok(0.0),
        };
        prepared.push((eligible, rf));
    }

    let jobs: Vec<(usize, usize)> = prepared
        .iter()
        .enumerate()
        .filter(|(_, (_, rf))| rf.is_ok())
        .flat_map(|(wi, (eligible, _))| eligible.iter().map(move |&a| (wi, a)))
        .collect();
    let summaries: Vec<RewardRiskSummary> = jobs
        .par_iter()
        .map(|&(wi, a)| {
            let w = &windows[wi];
            let obs = ret.observed(a, w.estimation.clone());
            let rf = *prepared[wi].1.as_ref().expect("filtered above");
            summarize(&ret.tickers[a], w.id, &obs, rf, &summary_options)
        })
        .collect();
    let mut by_window: BTreeMap<usize, Vec<RewardRiskSummary>> = BTreeMap::new();
    for s in &summaries {
        by_window.entry(s.window).or_default().push(s.clone());
    }

    let holding_days: Vec<usize> = windows.iter().flat_map(|w| w.holding.clone()).collect();
    let dates: Vec<NaiveDate> = holding_days.iter().map(|&d| ret.dates[d]).collect();
    let mut tracks = Vec::with_capacity(criteria.len());
    for &criterion in criteria {
        let mut frag = Fragment { winner: vec![], loser: vec![], wml: vec![] };
        let mut records = Vec::with_capacity(windows.len());
        for (wi, w) in windows.iter().enumerate() {
            let empty = Vec::new();
            let sums = by_window.get(&w.id).unwrap_or(&empty);
            let mut record = WindowRecord {
                id: w.id,
                formation_date: w.formation_date,
                estimation_start: ret.dates[w.estimation.start],
                holding_start: ret.dates[w.holding.start],
                holding_end: ret.dates[w.holding.end - 1],
                eligible: prepared[wi].0.len(),
                valid: sums.iter().filter(|s| s.valid).count(),
                student_t_fallbacks: sums.iter().filter(|s| s.student_t_fallback).count(),
                skipped: None,
                baskets: vec![],
            };
            let outcome = match &prepared[wi].1 {
                Err(e) => Err(e.clone()),
                Ok(_) => rank(sums, criterion, config.n_baskets)
                    .and_then(|b| {
                        let f = realize(&b[0], &b[b.len() - 1], ret, w.holding.clone())?;
                        Ok((b, f))
                    })
                    .map_err(|e| e.to_string()),
            };
            match outcome {
                Ok((baskets, f)) => {
                    record.baskets = baskets.into_iter().map(|b| b.members).collect();
                    frag.winner.extend(f.winner);
                    frag.loser.extend(f.loser);
                    frag.wml.extend(f.wml);
                }
                Err(reason) => {
                    log::warn!("window {} ({}) skipped for {criterion}: {reason}", w.id, w.formation_date);
                    record.skipped = Some(reason);
                    let n = w.holding.len();
                    frag.winner.extend(std::iter::repeat_n(0.0, n));
                    frag.loser.extend(std::iter::repeat_n(0.0, n));
                    frag.wml.extend(std::iter::repeat_n(0.0, n));
                }
            }
            records.push(record);
        }
        tracks.push(PortfolioTrack::assemble(criterion, dates.clone(), frag, records));
    }
    Ok(Backtest { windows, summaries, tracks })
}

pub fn run_backtest(universe: &Universe, config: &BacktestConfig) -> Result<PortfolioTrack, MomentumError> {
    Ok(run_backtest_multi(universe, config, &[config.criterion])?.remove(0))
}
