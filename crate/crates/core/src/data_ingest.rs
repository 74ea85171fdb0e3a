//! CSV ingestion of prices, index membership, risk-free yields and factors.
//!
//! Headers are checked exactly:
//!
//! | file        | header                               |
//! |-------------|--------------------------------------|
//! | prices      | `date,ticker,price`                  |
//! | membership  | `ticker,effective_from,effective_to` |
//! | risk-free   | `date,annual_yield`                  |
//! | factors     | `date,mkt,smb,hml,mom,rf`            |
//!
//! Dates are ISO-8601 (`YYYY-MM-DD`); factor files also accept `YYYY-MM`.
//! Nothing is repaired silently: malformed rows are errors, and every
//! normalisation applied is listed in the [`LoadReport`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::TRADING_DAYS_PER_YEAR;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}, column '{column}': {reason}")]
    Parse {
        row: usize,
        column: String,
        reason: String,
    },
    #[error("bad header: expected '{expected}', found '{found}'")]
    Header { expected: String, found: String },
    #[error("row {row}: duplicate entry for {ticker} on {date}")]
    DuplicateRow {
        row: usize,
        date: NaiveDate,
        ticker: String,
    },
    #[error("row {row}: non-positive price {price} for {ticker} on {date}")]
    NonPositivePrice {
        row: usize,
        date: NaiveDate,
        ticker: String,
        price: f64,
    },
    #[error("membership of {ticker}: {reason}")]
    InvalidInterval { ticker: String, reason: String },
    #[error("row {row}: {reason}")]
    InvalidValue { row: usize, reason: String },
    #[error("no risk-free rate available on or before {0}")]
    NoRateAvailable(NaiveDate),
}

pub type Result<T> = std::result::Result<T, IngestError>;

/// What happened while loading a file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub source: String,
    pub rows: usize,
    /// Normalisations applied (sorting, filled gaps, ...).
    pub notes: Vec<String>,
}

const PRICES_HEADER: [&str; 3] = ["date", "ticker", "price"];
const MEMBERSHIP_HEADER: [&str; 3] = ["ticker", "effective_from", "effective_to"];
const RISKFREE_HEADER: [&str; 2] = ["date", "annual_yield"];
const FACTORS_HEADER: [&str; 6] = ["date", "mkt", "smb", "hml", "mom", "rf"];

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn csv_reader<R: Read>(reader: R, expected: &[&str]) -> Result<csv::Reader<R>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let found = rdr
        .headers()
        .map_err(|e| IngestError::Parse { row: 1, column: "header".into(), reason: e.to_string() })?
        .iter()
        .collect::<Vec<_>>();
    if found != expected {
        return Err(IngestError::Header {
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    Ok(rdr)
}

/// Iterates data records with their 1-based file line (the header is line 1).
fn records<R: Read>(
    rdr: &mut csv::Reader<R>,
) -> impl Iterator<Item = Result<(usize, csv::StringRecord)>> + '_ {
    rdr.records().enumerate().map(|(i, r)| {
        let row = i + 2;
        r.map(|rec| (row, rec)).map_err(|e| IngestError::Parse {
            row,
            column: "*".into(),
            reason: e.to_string(),
        })
    })
}

fn parse_date(row: usize, column: &str, s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| IngestError::Parse {
        row,
        column: column.into(),
        reason: format!("'{s}': {e}"),
    })
}

fn parse_number(row: usize, column: &str, s: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|e| IngestError::Parse {
        row,
        column: column.into(),
        reason: format!("'{s}': {e}"),
    })?;
    if !v.is_finite() {
        return Err(IngestError::Parse { row, column: column.into(), reason: format!("'{s}' is not finite") });
    }
    Ok(v)
}

/// Prices on a union trading calendar; `None` marks a missing price.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    pub dates: Vec<NaiveDate>,
    /// Sorted ticker symbols.
    pub tickers: Vec<String>,
    /// `prices[asset][day]`.
    pub prices: Vec<Vec<Option<f64>>>,
    pub currency: Option<String>,
}

impl PricePanel {
    /// `(days, assets)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.dates.len(), self.tickers.len())
    }

    pub fn ticker_index(&self, ticker: &str) -> Option<usize> {
        self.tickers.binary_search_by(|t| t.as_str().cmp(ticker)).ok()
    }

    /// Builds a panel from `(date, ticker, price)` triples.
    pub fn from_rows(rows: impl IntoIterator<Item = (NaiveDate, String, f64)>) -> Result<Self> {
        let mut map: BTreeMap<String, BTreeMap<NaiveDate, f64>> = BTreeMap::new();
        let mut calendar = BTreeSet::new();
        for (i, (date, ticker, price)) in rows.into_iter().enumerate() {
            if !(price > 0.0) {
                return Err(IngestError::NonPositivePrice { row: i + 1, date, ticker, price });
            }
            calendar.insert(date);
            if map.entry(ticker.clone()).or_default().insert(date, price).is_some() {
                return Err(IngestError::DuplicateRow { row: i + 1, date, ticker });
            }
        }
        let dates: Vec<NaiveDate> = calendar.into_iter().collect();
        let tickers: Vec<String> = map.keys().cloned().collect();
        let prices = map
            .values()
            .map(|series| dates.iter().map(|d| series.get(d).copied()).collect())
            .collect();
        Ok(Self { dates, tickers, prices, currency: None })
    }
}

pub fn read_prices<R: Read>(reader: R) -> Result<(PricePanel, LoadReport)> {
    let mut rdr = csv_reader(reader, &PRICES_HEADER)?;
    let mut map: BTreeMap<String, BTreeMap<NaiveDate, f64>> = BTreeMap::new();
    let mut calendar = BTreeSet::new();
    let mut report = LoadReport::default();
    let mut last_date: Option<NaiveDate> = None;
    let mut sorted = true;
    for rec in records(&mut rdr) {
        let (row, rec) = rec?;
        let date = parse_date(row, "date", &rec[0])?;
        let ticker = rec[1].to_string();
        if ticker.is_empty() {
            return Err(IngestError::Parse { row, column: "ticker".into(), reason: "empty ticker".into() });
        }
        let price = parse_number(row, "price", &rec[2])?;
        if price <= 0.0 {
            return Err(IngestError::NonPositivePrice { row, date, ticker, price });
        }
        if last_date.is_some_and(|d| date < d) {
            sorted = false;
        }
        last_date = Some(date);
        calendar.insert(date);
        if map.entry(ticker.clone()).or_default().insert(date, price).is_some() {
            return Err(IngestError::DuplicateRow { row, date, ticker });
        }
        report.rows += 1;
    }
    if !sorted {
        report.notes.push("rows were not in date order; calendar sorted ascending".into());
    }
    let dates: Vec<NaiveDate> = calendar.into_iter().collect();
    let tickers: Vec<String> = map.keys().cloned().collect();
    let prices: Vec<Vec<Option<f64>>> = map
        .values()
        .map(|series| dates.iter().map(|d| series.get(d).copied()).collect())
        .collect();
    for (t, series) in tickers.iter().zip(&prices) {
        let missing = series.iter().filter(|p| p.is_none()).count();
        if missing > 0 {
            report.notes.push(format!("{t}: {missing} calendar dates without a price"));
        }
    }
    Ok((PricePanel { dates, tickers, prices, currency: None }, report))
}

pub fn load_prices(path: &Path) -> Result<(PricePanel, LoadReport)> {
    let (panel, mut report) = read_prices(open(path)?)?;
    report.source = path.display().to_string();
    Ok((panel, report))
}

/// Canonical form: sorted by date then ticker, missing prices omitted.
pub fn write_prices<W: Write>(panel: &PricePanel, writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PRICES_HEADER)?;
    for (d, date) in panel.dates.iter().enumerate() {
        for (a, ticker) in panel.tickers.iter().enumerate() {
            if let Some(p) = panel.prices[a][d] {
                w.write_record([date.to_string(), ticker.clone(), p.to_string()])?;
            }
        }
    }
    w.flush()
}

/// Daily simple returns on the panel calendar; `returns[asset][day]` is the
/// return from `day − 1` to `day` and is `None` unless both prices exist.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    pub returns: Vec<Vec<Option<f64>>>,
}

impl ReturnPanel {
    pub fn ticker_index(&self, ticker: &str) -> Option<usize> {
        self.tickers.binary_search_by(|t| t.as_str().cmp(ticker)).ok()
    }

    /// Present returns of one asset on days `range`.
    pub fn observed(&self, asset: usize, range: std::ops::Range<usize>) -> Vec<f64> {
        self.returns[asset][range].iter().flatten().copied().collect()
    }
}

pub fn to_returns(panel: &PricePanel) -> ReturnPanel {
    let returns = panel
        .prices
        .iter()
        .map(|series| {
            std::iter::once(None)
                .chain(series.windows(2).map(|w| match (w[0], w[1]) {
                    (Some(a), Some(b)) => Some(b / a - 1.0),
                    _ => None,
                }))
                .collect()
        })
        .collect();
    ReturnPanel {
        dates: panel.dates.clone(),
        tickers: panel.tickers.clone(),
        returns,
    }
}

/// Inclusive membership interval; `to = None` is open-ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub from: NaiveDate,
    pub to: Option<NaiveDate>,
}

impl Interval {
    pub fn contains(&self, date: NaiveDate) -> bool {
        self.from <= date && self.to.is_none_or(|to| date <= to)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MembershipHistory {
    pub intervals: BTreeMap<String, Vec<Interval>>,
}

impl MembershipHistory {
    /// Validates and sorts the intervals of each ticker.
    pub fn new(mut intervals: BTreeMap<String, Vec<Interval>>) -> Result<Self> {
        for (ticker, list) in intervals.iter_mut() {
            list.sort_by_key(|i| i.from);
            for i in list.iter() {
                if i.to.is_some_and(|to| to < i.from) {
                    return Err(IngestError::InvalidInterval {
                        ticker: ticker.clone(),
                        reason: format!("ends before it starts ({} > {})", i.from, i.to.unwrap()),
                    });
                }
            }
            for w in list.windows(2) {
                if w[0].to.is_none_or(|to| to >= w[1].from) {
                    return Err(IngestError::InvalidInterval {
                        ticker: ticker.clone(),
                        reason: format!("intervals starting {} and {} overlap", w[0].from, w[1].from),
                    });
                }
            }
        }
        Ok(Self { intervals })
    }

    pub fn is_member(&self, ticker: &str, date: NaiveDate) -> bool {
        self.intervals
            .get(ticker)
            .is_some_and(|list| list.iter().any(|i| i.contains(date)))
    }
}

/// Assets whose membership intervals contain `date`, endpoints included.
pub fn members_on(history: &MembershipHistory, date: NaiveDate) -> BTreeSet<String> {
    history
        .intervals
        .iter()
        .filter(|(_, list)| list.iter().any(|i| i.contains(date)))
        .map(|(t, _)| t.clone())
        .collect()
}

pub fn read_membership<R: Read>(reader: R) -> Result<(MembershipHistory, LoadReport)> {
    let mut rdr = csv_reader(reader, &MEMBERSHIP_HEADER)?;
    let mut map: BTreeMap<String, Vec<Interval>> = BTreeMap::new();
    let mut report = LoadReport::default();
    for rec in records(&mut rdr) {
        let (row, rec) = rec?;
        let ticker = rec[0].to_string();
        let from = parse_date(row, "effective_from", &rec[1])?;
        let to = if rec[2].is_empty() {
            None
        } else {
            Some(parse_date(row, "effective_to", &rec[2])?)
        };
        map.entry(ticker).or_default().push(Interval { from, to });
        report.rows += 1;
    }
    Ok((MembershipHistory::new(map)?, report))
}

pub fn load_membership(path: &Path) -> Result<(MembershipHistory, LoadReport)> {
    let (h, mut report) = read_membership(open(path)?)?;
    report.source = path.display().to_string();
    Ok((h, report))
}

/// Annualised yields (fractions per year) by date.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskFreeSeries {
    pub observations: Vec<(NaiveDate, f64)>,
}

impl RiskFreeSeries {
    pub fn new(observations: Vec<(NaiveDate, f64)>) -> Result<Self> {
        for (i, w) in observations.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(IngestError::InvalidValue {
                    row: i + 3,
                    reason: format!("dates not increasing ({} after {})", w[1].0, w[0].0),
                });
            }
        }
        if let Some((i, (_, y))) = observations.iter().enumerate().find(|(_, (_, y))| *y <= -1.0) {
            return Err(IngestError::InvalidValue { row: i + 2, reason: format!("yield {y} ≤ −1") });
        }
        Ok(Self { observations })
    }

    /// Constant yield from the beginning of time.
    pub fn constant(annual_yield: f64) -> Self {
        Self { observations: vec![(NaiveDate::MIN, annual_yield)] }
    }
}

/// Most recent yield at or before `date`, divided by 252.
pub fn riskfree_daily(series: &RiskFreeSeries, date: NaiveDate) -> Result<f64> {
    let k = series.observations.partition_point(|(d, _)| *d <= date);
    if k == 0 {
        return Err(IngestError::NoRateAvailable(date));
    }
    Ok(series.observations[k - 1].1 / TRADING_DAYS_PER_YEAR)
}

pub fn read_riskfree<R: Read>(reader: R) -> Result<(RiskFreeSeries, LoadReport)> {
    let mut rdr = csv_reader(reader, &RISKFREE_HEADER)?;
    let mut obs = Vec::new();
    let mut report = LoadReport::default();
    for rec in records(&mut rdr) {
        let (row, rec) = rec?;
        obs.push((parse_date(row, "date", &rec[0])?, parse_number(row, "annual_yield", &rec[1])?));
        report.rows += 1;
    }
    Ok((RiskFreeSeries::new(obs)?, report))
}

pub fn load_riskfree(path: &Path) -> Result<(RiskFreeSeries, LoadReport)> {
    let (s, mut report) = read_riskfree(open(path)?)?;
    report.source = path.display().to_string();
    Ok((s, report))
}

/// Monthly factor returns in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorRow {
    pub date: NaiveDate,
    pub mkt: f64,
    pub smb: f64,
    pub hml: f64,
    pub mom: f64,
    pub rf: f64,
}

impl FactorRow {
    pub fn month(&self) -> (i32, u32) {
        (self.date.year(), self.date.month())
    }
}

fn parse_month_or_date(row: usize, s: &str) -> Result<NaiveDate> {
    if s.len() == 7 {
        return parse_date(row, "date", &format!("{s}-01"));
    }
    parse_date(row, "date", s)
}

pub fn read_factors<R: Read>(reader: R) -> Result<(Vec<FactorRow>, LoadReport)> {
    let mut rdr = csv_reader(reader, &FACTORS_HEADER)?;
    let mut rows = Vec::new();
    let mut report = LoadReport::default();
    let mut seen = HashMap::new();
    for rec in records(&mut rdr) {
        let (row, rec) = rec?;
        let date = parse_month_or_date(row, &rec[0])?;
        let num = |i: usize| parse_number(row, FACTORS_HEADER[i], &rec[i]);
        let r = FactorRow { date, mkt: num(1)?, smb: num(2)?, hml: num(3)?, mom: num(4)?, rf: num(5)? };
        if let Some(prev) = seen.insert(r.month(), row) {
            return Err(IngestError::InvalidValue {
                row,
                reason: format!("month {}-{:02} already given on row {prev}", r.month().0, r.month().1),
            });
        }
        rows.push(r);
        report.rows += 1;
    }
    Ok((rows, report))
}

pub fn load_factors(path: &Path) -> Result<(Vec<FactorRow>, LoadReport)> {
    let (f, mut report) = read_factors(open(path)?)?;
    report.source = path.display().to_string();
    Ok((f, report))
}
