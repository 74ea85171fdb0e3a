//! `tempest`: fit ARMA-GARCH-CTS models, run reward-risk momentum backtests,
//! regress tracks on the Carhart factors and print run reports.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{Overrides, RunConfig};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "tempest", version, about = "Reward-risk momentum backtesting with ARMA-GARCH-CTS models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the model to every ticker of a price file; writes fit_report.json.
    Fit {
        /// Price file (date,ticker,price).
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the momentum backtest described by a config file or manifest.
    Backtest {
        #[command(flatten)]
        common: Common,
    },
    /// Regress a monthly track file on the four factors.
    Factors {
        /// Monthly track file (month,winner,loser,wml).
        #[arg(long)]
        track: PathBuf,
        /// Factor file (date,mkt,smb,hml,mom,rf); defaults to the config's.
        #[arg(long)]
        factors: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Print the summary tables of a finished run directory.
    Report {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Flat key = value config file, or a manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ranking criteria (repeatable or comma-separated).
    #[arg(long, value_delimiter = ',')]
    criterion: Vec<String>,
    #[arg(long)]
    baskets: Option<usize>,
    #[arg(long)]
    estimation_months: Option<usize>,
    #[arg(long)]
    holding_months: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let overrides = Overrides {
            criteria: self.criterion.clone(),
            baskets: self.baskets,
            estimation_months: self.estimation_months,
            holding_months: self.holding_months,
            seed: self.seed,
            out: self.out.clone(),
        };
        RunConfig::resolve(self.config.as_deref(), &overrides)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit { input, common } => {
            if !input.is_file() {
                return Err(CliError::Validation(format!("input file not found: {}", input.display())));
            }
            let path = commands::cmd_fit(&input, &common.resolve()?)?;
            println!("{}", path.display());
        }
        Command::Backtest { common } => {
            let path = commands::cmd_backtest(&common.resolve()?)?;
            println!("{}", path.display());
        }
        Command::Factors { track, factors, common } => {
            let cfg = common.resolve()?;
            let factors = factors
                .or_else(|| cfg.factors.clone())
                .ok_or_else(|| CliError::Validation("no factor file given".into()))?;
            if !factors.is_file() {
                return Err(CliError::Validation(format!("factors file not found: {}", factors.display())));
            }
            let path = commands::cmd_factors(&track, &factors, &cfg)?;
            println!("{}", path.display());
        }
        Command::Report { common } => {
            let cfg = common.resolve()?;
            let dir = cfg.out.ok_or_else(|| CliError::Validation("give the run directory with --out".into()))?;
            print!("{}", commands::cmd_report(&dir)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TEMPEST_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
