//! Seeded synthetic universes for demonstrations and end-to-end checks.

use chrono::{Datelike, Months, NaiveDate, Weekday};

use crate::arma_garch::{simulate, ArmaGarchParams};
use crate::cts::{standardize, CtsDistribution, CtsError};
use crate::data_ingest::{PricePanel, ReturnPanel};

/// Monday-to-Friday dates in `[start, end)`.
pub fn business_days(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    start
        .iter_days()
        .take_while(|d| *d < end)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .collect()
}

/// Assets whose drift falls as their downside tail gets heavier.
///
/// Asset `i` of `n` has GARCH(1,1) volatility around `vol` per day, stdCTS
/// innovations with common `alpha` and `lambda_plus`, and `λ₋` moving
/// geometrically from `lambda_minus.0` (asset 0, lightest left tail) to
/// `lambda_minus.1`. Its daily drift moves linearly from `drift.0` to `drift.1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailDriftUniverse {
    pub n_assets: usize,
    pub start: NaiveDate,
    pub months: u32,
    pub alpha: f64,
    pub lambda_plus: f64,
    pub lambda_minus: (f64, f64),
    pub drift: (f64, f64),
    pub vol: f64,
    pub garch: (f64, f64),
}

impl Default for TailDriftUniverse {
    fn default() -> Self {
        Self {
            n_assets: 9,
            start: NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date"),
            months: 90,
            alpha: 1.3,
            lambda_plus: 2.0,
            lambda_minus: (4.0, 0.4),
            drift: (6e-4, -6e-4),
            vol: 0.01,
            garch: (0.05, 0.90),
        }
    }
}

impl TailDriftUniverse {
    fn position(&self, i: usize) -> f64 {
        if self.n_assets == 1 {
            0.0
        } else {
            i as f64 / (self.n_assets - 1) as f64
        }
    }

    /// Model parameters and innovation shape `(α, λ₊, λ₋)` of asset `i`.
    pub fn asset(&self, i: usize) -> (ArmaGarchParams, (f64, f64, f64)) {
        let t = self.position(i);
        let (a1, b1) = self.garch;
        let params = ArmaGarchParams {
            c: self.drift.0 + t * (self.drift.1 - self.drift.0),
            a: 0.0,
            b: 0.0,
            omega: self.vol * self.vol * (1.0 - a1 - b1),
            alpha1: a1,
            beta1: b1,
            nu: 8.0,
        };
        let lm = self.lambda_minus.0 * (self.lambda_minus.1 / self.lambda_minus.0).powf(t);
        (params, (self.alpha, self.lambda_plus, lm))
    }

    pub fn ticker(i: usize) -> String {
        format!("S{i:02}")
    }

    /// Daily returns for every asset; asset `i` draws its innovations from
    /// the stream `seed·1000 + i`.
    pub fn generate(&self, seed: u64) -> Result<ReturnPanel, CtsError> {
        let end = self.start + Months::new(self.months);
        let dates = business_days(self.start, end);
        let mut returns = Vec::with_capacity(self.n_assets);
        for i in 0..self.n_assets {
            let (params, (a, lp, lm)) = self.asset(i);
            let law = standardize(a, lp, lm)?;
            let eps = CtsDistribution::new(law.to_cts())?.sample(dates.len(), seed * 1000 + i as u64);
            returns.push(simulate(&params, &eps).into_iter().map(Some).collect());
        }
        Ok(ReturnPanel {
            dates,
            tickers: (0..self.n_assets).map(Self::ticker).collect(),
            returns,
        })
    }
}

/// Prices starting at `base` that reproduce `returns` (missing returns hold
/// the price). The first date carries the base price.
pub fn prices_from_returns(returns: &ReturnPanel, base: f64) -> PricePanel {
    let prices = returns
        .returns
        .iter()
        .map(|series| {
            let mut p = base;
            series
                .iter()
                .enumerate()
                .map(|(t, r)| {
                    if t > 0 {
                        p *= 1.0 + r.unwrap_or(0.0);
                    }
                    Some(p)
                })
                .collect()
        })
        .collect();
    PricePanel {
        dates: returns.dates.clone(),
        tickers: returns.tickers.clone(),
        prices,
        currency: None,
    }
}
