use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use tempest_core::analytics::{
    align_factors, carhart, cumulative_monthly, monthly_summary, risk_stats, FactorReport, FACTOR_NAMES,
};
use tempest_core::arma_garch::{fit, ArmaGarchParams, Innovations};
use tempest_core::cts::StdCtsParams;
use tempest_core::data_ingest::{
    load_factors, load_membership, load_prices, load_riskfree, riskfree_daily, to_returns, FactorRow, LoadReport,
};
use tempest_core::momentum::{self, PortfolioTrack, Universe, WindowRecord};
use tempest_core::reward_risk::RewardRiskSummary;
use tempest_core::synthetic::TailDriftUniverse;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{num, write_json, Table};

pub const LEGS: [&str; 3] = ["winner", "loser", "wml"];

/// One asset's entry in the fit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetFit {
    pub asset: String,
    pub observations: usize,
    pub params: ArmaGarchParams,
    pub innovations: Innovations,
    pub cts: Option<StdCtsParams>,
    pub ks: Option<f64>,
    pub loglik_t: f64,
    pub loglik_cts: Option<f64>,
    pub fallback_reason: Option<String>,
    pub forecast_mean: f64,
    pub forecast_sigma: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FitReport {
    pub source: String,
    pub assets: Vec<AssetFit>,
}

/// Fits the model to the whole return history of every ticker in `input`.
pub fn cmd_fit(input: &Path, cfg: &RunConfig) -> Result<PathBuf, CliError> {
    cfg.validate_model()?;
    let (panel, report) = load_prices(input)?;
    for note in &report.notes {
        log::info!("{}: {note}", input.display());
    }
    let returns = to_returns(&panel);
    let options = cfg.model_options();
    let mut assets = Vec::with_capacity(returns.tickers.len());
    for (a, ticker) in returns.tickers.iter().enumerate() {
        let ys = returns.observed(a, 0..returns.dates.len());
        let f = fit(&ys, &options).map_err(|e| CliError::Fit(format!("{ticker}: {e}")))?;
        if let Some(reason) = &f.fallback_reason {
            log::warn!("{ticker}: Student-t innovations used ({reason})");
        }
        assets.push(AssetFit {
            asset: ticker.clone(),
            observations: ys.len(),
            params: f.params,
            innovations: f.innovations,
            cts: match f.innovations {
                Innovations::Cts(p) => Some(p),
                Innovations::StudentT { .. } => None,
            },
            ks: f.ks,
            loglik_t: f.loglik_t,
            loglik_cts: f.loglik_cts,
            fallback_reason: f.fallback_reason.clone(),
            forecast_mean: f.forecast_mean(),
            forecast_sigma: f.forecast_sigma(),
        });
    }
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from(".")).join("fit_report.json");
    write_json(&out, &FitReport { source: input.display().to_string(), assets })?;
    Ok(out)
}

/// One (criterion, leg) regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorEntry {
    pub criterion: String,
    pub leg: String,
    pub report: FactorReport,
}

fn factor_entries(
    criterion: &str,
    months: &[NaiveDate],
    legs: [&[f64]; 3],
    factors: &[FactorRow],
) -> Result<Vec<FactorEntry>, CliError> {
    let aligned = align_factors(months, factors).map_err(|e| CliError::Validation(e.to_string()))?;
    LEGS.iter()
        .zip(legs)
        .map(|(leg, r)| {
            let pct: Vec<f64> = r.iter().map(|x| 100.0 * x).collect();
            let report = carhart(&pct, &aligned).map_err(|e| CliError::Validation(format!("{criterion} {leg}: {e}")))?;
            Ok(FactorEntry { criterion: criterion.to_string(), leg: leg.to_string(), report })
        })
        .collect()
}

fn factor_table(entries: &[FactorEntry]) -> Table {
    let mut header = vec!["criterion".to_string(), "leg".to_string(), "observations".to_string()];
    for name in FACTOR_NAMES {
        let est = if name == "alpha" { "alpha_pct".to_string() } else { format!("beta_{name}") };
        header.extend([est, format!("{name}_t"), format!("{name}_sig")]);
    }
    header.push("r_squared".into());
    let mut t = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for e in entries {
        let mut row = vec![e.criterion.clone(), e.leg.clone(), e.report.observations.to_string()];
        for c in &e.report.coefficients {
            row.extend([c.estimate.to_string(), num(c.t_stat), c.stars().to_string()]);
        }
        row.push(e.report.r_squared.to_string());
        t.row(row);
    }
    t
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FactorFile {
    pub track: String,
    pub entries: Vec<FactorEntry>,
}

/// Monthly track file: `month,winner,loser,wml`.
pub fn read_monthly_track(path: &Path) -> Result<(Vec<NaiveDate>, [Vec<f64>; 3]), CliError> {
    let bad = |msg: String| CliError::Validation(format!("{}: {msg}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header: Vec<String> = rdr.headers().map_err(|e| bad(e.to_string()))?.iter().map(String::from).collect();
    if header != ["month", "winner", "loser", "wml"] {
        return Err(bad(format!("expected header month,winner,loser,wml, found {}", header.join(","))));
    }
    let mut months = Vec::new();
    let mut legs: [Vec<f64>; 3] = Default::default();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let row = i + 2;
        months.push(
            NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|e| bad(format!("row {row}: '{}': {e}", &rec[0])))?,
        );
        for (k, leg) in legs.iter_mut().enumerate() {
            leg.push(rec[k + 1].parse().map_err(|e| bad(format!("row {row}: '{}': {e}", &rec[k + 1])))?);
        }
    }
    Ok((months, legs))
}

/// Carhart regressions of each leg of a monthly track file.
pub fn cmd_factors(track: &Path, factors: &Path, cfg: &RunConfig) -> Result<PathBuf, CliError> {
    if !track.is_file() {
        return Err(CliError::Validation(format!("track file not found: {}", track.display())));
    }
    let (months, legs) = read_monthly_track(track)?;
    let (rows, _) = load_factors(factors)?;
    let stem = track.file_stem().and_then(|s| s.to_str()).unwrap_or("track");
    let criterion = stem.strip_suffix("_monthly").unwrap_or(stem);
    let entries = factor_entries(criterion, &months, [&legs[0], &legs[1], &legs[2]], &rows)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    factor_table(&entries).write(&dir.join("factor_report.csv"))?;
    let out = dir.join("factor_report.json");
    write_json(&out, &FactorFile { track: track.display().to_string(), entries })?;
    Ok(out)
}

#[derive(Serialize)]
struct WindowSpan {
    id: usize,
    estimation_start: NaiveDate,
    formation_date: NaiveDate,
    holding_start: NaiveDate,
    holding_end: NaiveDate,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    inputs: Vec<LoadReport>,
    calendar: (Option<NaiveDate>, Option<NaiveDate>, usize),
    windows: Vec<WindowSpan>,
    diagnostics: BTreeMap<String, Vec<WindowRecord>>,
    outputs: Vec<String>,
}

fn load_universe(cfg: &RunConfig) -> Result<(Universe, Vec<LoadReport>), CliError> {
    let mut inputs = Vec::new();
    let returns = match (&cfg.prices, cfg.synthetic_assets) {
        (Some(p), _) => {
            let (panel, report) = load_prices(p)?;
            inputs.push(report);
            to_returns(&panel)
        }
        (None, Some(n)) => {
            let u = TailDriftUniverse {
                n_assets: n,
                months: cfg.synthetic_months.unwrap_or(TailDriftUniverse::default().months),
                ..Default::default()
            };
            u.generate(cfg.seed).map_err(|e| CliError::Validation(format!("synthetic universe: {e}")))?
        }
        (None, None) => return Err(CliError::Validation("no prices file given".into())),
    };
    let membership = match &cfg.membership {
        Some(p) => {
            let (h, report) = load_membership(p)?;
            inputs.push(report);
            Some(h)
        }
        None => None,
    };
    let riskfree = match &cfg.riskfree {
        Some(p) => {
            let (s, report) = load_riskfree(p)?;
            inputs.push(report);
            Some(s)
        }
        None => None,
    };
    Ok((Universe { returns, membership, riskfree }, inputs))
}

fn legs_of(t: &PortfolioTrack) -> [(&str, &[f64], &[f64]); 3] {
    [
        (LEGS[0], &t.winner, &t.monthly_winner),
        (LEGS[1], &t.loser, &t.monthly_loser),
        (LEGS[2], &t.wml, &t.monthly_wml),
    ]
}

const SUMMARY_HEADER: [&str; 23] = [
    "asset", "window", "valid", "reason", "observations", "cum_return", "sharpe", "cvar99", "cvar95", "cvar90",
    "star99", "star95", "star90", "rr_99_99", "rr_95_95", "rr_90_90", "rr_50_99", "rr_50_95", "rr_50_90", "alpha",
    "lambda_plus", "lambda_minus", "student_t_fallback",
];

fn summary_table(summaries: &[RewardRiskSummary]) -> Table {
    let mut t = Table::new(&SUMMARY_HEADER);
    for s in summaries {
        let mut row = vec![
            s.asset.clone(),
            s.window.to_string(),
            s.valid.to_string(),
            s.reason.clone().unwrap_or_default(),
            s.observations.to_string(),
        ];
        row.extend(tempest_core::reward_risk::Criterion::ALL.iter().map(|&c| num(s.value(c))));
        row.extend([
            num(s.cts.map(|p| p.alpha())),
            num(s.cts.map(|p| p.lambda_plus())),
            num(s.cts.map(|p| p.lambda_minus())),
            s.student_t_fallback.to_string(),
        ]);
        t.row(row);
    }
    t
}

/// Runs the backtest for every configured criterion and writes all outputs.
pub fn cmd_backtest(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    cfg.validate()?;
    let out = cfg.out.clone().expect("validated");
    let (universe, mut inputs) = load_universe(cfg)?;
    let factors = match &cfg.factors {
        Some(p) => {
            let (rows, report) = load_factors(p)?;
            inputs.push(report);
            Some(rows)
        }
        None => None,
    };
    let run = momentum::backtest(&universe, &cfg.backtest_config(cfg.criteria[0]), &cfg.criteria)
        .map_err(|e| CliError::Validation(e.to_string()))?;

    // every report is computed before anything is written
    let mut factor_rows = Vec::new();
    if let Some(rows) = &factors {
        for t in &run.tracks {
            let legs = legs_of(t);
            factor_rows.extend(factor_entries(t.criterion.id(), &t.months, [legs[0].2, legs[1].2, legs[2].2], rows)?);
        }
    }
    let last_date = run.tracks.first().and_then(|t| t.dates.last().copied());
    let rf = match (&universe.riskfree, last_date) {
        (Some(s), Some(d)) => riskfree_daily(s, d).unwrap_or_else(|e| {
            log::warn!("risk statistics use a zero risk-free rate: {e}");
            0.0
        }),
        _ => 0.0,
    };
    let model = cfg.model_options();
    let mut monthly = Table::new(&[
        "criterion", "leg", "months", "mean_pct", "stdev_pct", "skewness", "excess_kurtosis", "final_wealth", "status",
    ]);
    let mut risk = Table::new(&[
        "criterion", "leg", "observations", "alpha", "lambda_plus", "lambda_minus", "ks", "daily_sharpe", "var95_pct",
        "cvar95_pct", "mdd_pct", "student_t_fallback", "status",
    ]);
    for t in &run.tracks {
        for (leg, daily, months) in legs_of(t) {
            let id = t.criterion.id().to_string();
            match monthly_summary(months) {
                Ok(s) => monthly.row([
                    id.clone(),
                    leg.to_string(),
                    s.months.to_string(),
                    s.mean_pct.to_string(),
                    s.stdev_pct.to_string(),
                    s.skewness.to_string(),
                    s.excess_kurtosis.to_string(),
                    s.final_wealth.to_string(),
                    "ok".to_string(),
                ]),
                Err(e) => {
                    let mut row = vec![id.clone(), leg.to_string(), months.len().to_string()];
                    row.extend(std::iter::repeat_n(String::new(), 5));
                    row.push(e.to_string());
                    monthly.row(row);
                }
            }
            // the W−L portfolio is self-financing: no risk-free deduction
            let leg_rf = if leg == "wml" { 0.0 } else { rf };
            match risk_stats(daily, leg_rf, &model) {
                Ok(r) => risk.row([
                    id,
                    leg.to_string(),
                    r.observations.to_string(),
                    num(r.alpha),
                    num(r.lambda_plus),
                    num(r.lambda_minus),
                    num(r.ks),
                    r.daily_sharpe.to_string(),
                    r.var95_pct.to_string(),
                    r.cvar95_pct.to_string(),
                    r.mdd_pct.to_string(),
                    r.student_t_fallback.to_string(),
                    "ok".to_string(),
                ]),
                Err(e) => {
                    log::warn!("risk statistics for {id} {leg}: {e}");
                    let mut row = vec![id, leg.to_string(), daily.len().to_string()];
                    row.extend(std::iter::repeat_n(String::new(), 9));
                    row.push(e.to_string());
                    risk.row(row);
                }
            }
        }
    }

    let mut outputs = Vec::new();
    let mut emit = |name: String, table: Table| -> Result<(), CliError> {
        table.write(&out.join(&name))?;
        outputs.push(name);
        Ok(())
    };
    for t in &run.tracks {
        let id = t.criterion.id();
        let mut daily = Table::new(&["date", "winner", "loser", "wml"]);
        for i in 0..t.dates.len() {
            daily.row([t.dates[i].to_string(), t.winner[i].to_string(), t.loser[i].to_string(), t.wml[i].to_string()]);
        }
        emit(format!("tracks/{id}_daily.csv"), daily)?;
        let mut m = Table::new(&["month", "winner", "loser", "wml"]);
        for i in 0..t.months.len() {
            m.row([
                t.months[i].to_string(),
                t.monthly_winner[i].to_string(),
                t.monthly_loser[i].to_string(),
                t.monthly_wml[i].to_string(),
            ]);
        }
        emit(format!("tracks/{id}_monthly.csv"), m)?;
    }
    let mut header = vec!["month"];
    header.extend(run.tracks.iter().map(|t| t.criterion.id()));
    let mut cumulative = Table::new(&header);
    let sums: Vec<Vec<f64>> = run.tracks.iter().map(|t| cumulative_monthly(&t.monthly_wml)).collect();
    if let Some(first) = run.tracks.first() {
        for (i, m) in first.months.iter().enumerate() {
            let mut row = vec![m.to_string()];
            row.extend(sums.iter().map(|s| s[i].to_string()));
            cumulative.row(row);
        }
    }
    emit("cumulative_wml.csv".into(), cumulative)?;
    emit("summaries.csv".into(), summary_table(&run.summaries))?;
    emit("monthly_summary.csv".into(), monthly)?;
    emit("risk_stats.csv".into(), risk)?;
    if factors.is_some() {
        emit("factor_report.csv".into(), factor_table(&factor_rows))?;
        write_json(&out.join("factor_report.json"), &FactorFile { track: "backtest".into(), entries: factor_rows })?;
        outputs.push("factor_report.json".into());
    }

    let manifest = Manifest {
        tool: "tempest",
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        inputs,
        calendar: (
            universe.returns.dates.first().copied(),
            universe.returns.dates.last().copied(),
            universe.returns.dates.len(),
        ),
        windows: run
            .windows
            .iter()
            .map(|w| WindowSpan {
                id: w.id,
                estimation_start: universe.returns.dates[w.estimation.start],
                formation_date: w.formation_date,
                holding_start: universe.returns.dates[w.holding.start],
                holding_end: universe.returns.dates[w.holding.end - 1],
            })
            .collect(),
        diagnostics: run.tracks.iter().map(|t| (t.criterion.id().to_string(), t.windows.clone())).collect(),
        outputs,
    };
    let path = out.join("manifest.json");
    write_json(&path, &manifest)?;
    Ok(path)
}

/// Prints the summary tables of a finished run as aligned text.
pub fn cmd_report(dir: &Path) -> Result<String, CliError> {
    let mut text = String::new();
    for (title, name) in [
        ("Monthly returns", "monthly_summary.csv"),
        ("Risk statistics (daily)", "risk_stats.csv"),
        ("Four-factor regressions", "factor_report.csv"),
    ] {
        let path = dir.join(name);
        if !path.is_file() {
            if name == "factor_report.csv" {
                continue;
            }
            return Err(CliError::Validation(format!("not a finished run, missing {}", path.display())));
        }
        let mut rdr = csv::Reader::from_path(&path).map_err(|e| CliError::Validation(e.to_string()))?;
        let mut rows: Vec<Vec<String>> =
            vec![rdr.headers().map_err(|e| CliError::Validation(e.to_string()))?.iter().map(String::from).collect()];
        for rec in rdr.records() {
            let rec = rec.map_err(|e| CliError::Validation(e.to_string()))?;
            rows.push(rec.iter().map(short).collect());
        }
        let widths: Vec<usize> =
            (0..rows[0].len()).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
        text.push_str(title);
        text.push('\n');
        for r in &rows {
            let cells: Vec<String> = r.iter().zip(&widths).map(|(v, w)| format!("{v:>w$}")).collect();
            text.push_str(cells.join("  ").trim_end());
            text.push('\n');
        }
        text.push('\n');
    }
    Ok(text)
}

/// Four decimals for numeric cells.
fn short(cell: &str) -> String {
    match cell.parse::<f64>() {
        Ok(v) if cell.contains('.') || cell.contains('e') => format!("{v:.4}"),
        _ => cell.to_string(),
    }
}
