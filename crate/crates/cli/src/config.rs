//! Run configuration: a flat `key = value` file, or the `config` section of a
//! previous run's manifest, with command-line overrides on top.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tempest_core::arma_garch::ArmaGarchOptions;
use tempest_core::cts::FitOptions;
use tempest_core::momentum::BacktestConfig;
use tempest_core::reward_risk::{Criterion, SummaryOptions};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub prices: Option<PathBuf>,
    pub membership: Option<PathBuf>,
    pub riskfree: Option<PathBuf>,
    pub factors: Option<PathBuf>,
    /// Not echoed into the manifest: where a run is written does not change it.
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub estimation_months: usize,
    pub holding_months: usize,
    pub baskets: usize,
    pub criteria: Vec<Criterion>,
    pub seed: u64,
    pub fft_points: Option<usize>,
    pub restarts: Option<usize>,
    pub min_observations: usize,
    pub synthetic_assets: Option<usize>,
    pub synthetic_months: Option<u32>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            prices: None,
            membership: None,
            riskfree: None,
            factors: None,
            out: None,
            estimation_months: 6,
            holding_months: 6,
            baskets: 3,
            criteria: Criterion::ALL.to_vec(),
            seed: 0,
            fft_points: None,
            restarts: None,
            min_observations: tempest_core::MIN_OBSERVATIONS,
            synthetic_assets: None,
            synthetic_months: None,
        }
    }
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub criteria: Vec<String>,
    pub baskets: Option<usize>,
    pub estimation_months: Option<usize>,
    pub holding_months: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn parse_criteria(list: &str) -> Result<Vec<Criterion>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Criterion>().map_err(|e| invalid(e.to_string())))
        .collect()
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| invalid(format!("{key}: cannot parse '{value}'")))
}

/// Parses `key = value` lines; `#` starts a comment. Relative paths are taken
/// relative to `base`.
pub fn parse_flat(text: &str, base: &Path) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| invalid(format!("config line {}: expected key = value", i + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(invalid(format!("config line {}: '{key}' given twice", i + 1)));
        }
        let path = || Some(base.join(value));
        match key {
            "prices" => cfg.prices = path(),
            "membership" => cfg.membership = path(),
            "riskfree" => cfg.riskfree = path(),
            "factors" => cfg.factors = path(),
            "out" => cfg.out = path(),
            "estimation_months" => cfg.estimation_months = parse_value(key, value)?,
            "holding_months" => cfg.holding_months = parse_value(key, value)?,
            "baskets" => cfg.baskets = parse_value(key, value)?,
            "criteria" => cfg.criteria = parse_criteria(value)?,
            "seed" => cfg.seed = parse_value(key, value)?,
            "fft_points" => cfg.fft_points = Some(parse_value(key, value)?),
            "restarts" => cfg.restarts = Some(parse_value(key, value)?),
            "min_observations" => cfg.min_observations = parse_value(key, value)?,
            "synthetic_assets" => cfg.synthetic_assets = Some(parse_value(key, value)?),
            "synthetic_months" => cfg.synthetic_months = Some(parse_value(key, value)?),
            other => return Err(invalid(format!("config line {}: unknown key '{other}'", i + 1))),
        }
    }
    Ok(cfg)
}

/// Reads a flat config file or a manifest written by `backtest`.
pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        #[derive(Deserialize)]
        struct Manifest {
            config: RunConfig,
        }
        let m: Manifest =
            serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        return Ok(m.config);
    }
    let base = path.parent().unwrap_or(Path::new("."));
    parse_flat(&text, base)
}

impl RunConfig {
    pub fn resolve(config: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match config {
            Some(p) => load(p)?,
            None => RunConfig::default(),
        };
        if !overrides.criteria.is_empty() {
            cfg.criteria = parse_criteria(&overrides.criteria.join(","))?;
        }
        if let Some(v) = overrides.baskets {
            cfg.baskets = v;
        }
        if let Some(v) = overrides.estimation_months {
            cfg.estimation_months = v;
        }
        if let Some(v) = overrides.holding_months {
            cfg.holding_months = v;
        }
        if let Some(v) = overrides.seed {
            cfg.seed = v;
        }
        if let Some(v) = &overrides.out {
            cfg.out = Some(v.clone());
        }
        Ok(cfg)
    }

    /// Checks everything except the input paths.
    pub fn validate_model(&self) -> Result<(), CliError> {
        if let Some(n) = self.fft_points {
            if n < 1024 || !n.is_power_of_two() {
                return Err(invalid(format!("fft_points must be a power of two ≥ 1024, got {n}")));
            }
        }
        if let Some(r) = self.restarts {
            if !(1..=FitOptions::default().starts.len()).contains(&r) {
                return Err(invalid(format!("restarts must be between 1 and 3, got {r}")));
            }
        }
        if self.min_observations < 2 {
            return Err(invalid("min_observations must be at least 2"));
        }
        Ok(())
    }

    /// Full validation for a backtest run.
    pub fn validate(&self) -> Result<(), CliError> {
        self.validate_model()?;
        if self.criteria.is_empty() {
            return Err(invalid("the criterion list is empty"));
        }
        self.backtest_config(self.criteria[0]).validate().map_err(|e| invalid(e.to_string()))?;
        match (&self.prices, self.synthetic_assets) {
            (Some(_), Some(_)) => return Err(invalid("give either prices or synthetic_assets, not both")),
            (None, None) => return Err(invalid("no prices file given")),
            (None, Some(n)) if n < 2 => return Err(invalid("synthetic_assets must be at least 2")),
            _ => {}
        }
        for (key, p) in [
            ("prices", &self.prices),
            ("membership", &self.membership),
            ("riskfree", &self.riskfree),
            ("factors", &self.factors),
        ] {
            if let Some(p) = p {
                if !p.is_file() {
                    return Err(invalid(format!("{key} file not found: {}", p.display())));
                }
            }
        }
        if self.out.is_none() {
            return Err(invalid("no output directory given (--out or out = ...)"));
        }
        Ok(())
    }

    fn apply(&self, cts: &mut FitOptions) {
        if let Some(n) = self.fft_points {
            cts.grid.n_points = n;
            cts.grid.max_points = cts.grid.max_points.max(n);
        }
        if let Some(r) = self.restarts {
            cts.starts.truncate(r);
        }
        cts.min_samples = self.min_observations;
    }

    /// Options for whole-track fits (`fit`, risk statistics).
    pub fn model_options(&self) -> ArmaGarchOptions {
        let mut o = ArmaGarchOptions { min_observations: self.min_observations, ..ArmaGarchOptions::default() };
        self.apply(&mut o.cts);
        o
    }

    pub fn summary_options(&self) -> SummaryOptions {
        let mut s = SummaryOptions::default();
        s.model.min_observations = self.min_observations;
        self.apply(&mut s.model.cts);
        s
    }

    pub fn backtest_config(&self, criterion: Criterion) -> BacktestConfig {
        BacktestConfig {
            estimation_months: self.estimation_months,
            holding_months: self.holding_months,
            n_baskets: self.baskets,
            criterion,
            summary: self.summary_options(),
        }
    }
}
