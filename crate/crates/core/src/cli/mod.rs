//! Command-line interface: data acquisition, backtests, sweeps, theory
//! verification and comparisons.
//!
//! Exit codes are a stable contract: 0 success, 1 runtime or data failure,
//! 2 usage error. Primary output files never embed wall-clock timestamps or
//! absolute paths — a `<out>.meta.json` sidecar carries those — so a rerun
//! with the same config and inputs is byte-identical.

mod commands;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// A command failure carrying the exit code to report.
#[derive(Debug)]
pub struct CliFailure {
    pub code: i32,
    pub message: String,
}

impl CliFailure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }
}

macro_rules! runtime_from {
    ($($ty:ty),*) => {
        $(impl From<$ty> for CliFailure {
            fn from(err: $ty) -> Self {
                CliFailure::runtime(err.to_string())
            }
        })*
    };
}

runtime_from!(
    crate::market_data::MarketDataError,
    crate::grid_engine::EngineError,
    crate::analytics::AnalyticsError,
    crate::backtest::BacktestError,
    std::io::Error
);

#[derive(Debug, Parser)]
#[command(
    name = "gridbt",
    version,
    about = "Geometric grid-trading backtester and expected-value analytics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download 1-minute klines into a CSV cache (extends an existing cache).
    Fetch(FetchArgs),
    /// Replay one strategy over cached or synthetic candles.
    Backtest(BacktestArgs),
    /// Backtest a whole (grid size x half count) parameter matrix.
    Sweep(SweepArgs),
    /// Check the closed-form expected-value results against Monte Carlo.
    VerifyEv(VerifyEvArgs),
    /// Side-by-side dynamic grid vs buy-and-hold vs fixed-bound grid.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// Exchange pair, e.g. BTCUSDT.
    pub symbol: String,
    /// Window start, ISO-8601 (2021-01-01 or RFC 3339).
    #[arg(long)]
    pub start: String,
    /// Window end (exclusive), ISO-8601.
    #[arg(long)]
    pub end: String,
    /// Cache CSV to write or extend.
    #[arg(long)]
    pub cache: PathBuf,
    /// API base URL; overrides the GRIDBT_API_BASE environment variable.
    #[arg(long)]
    pub base_url: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Dgt,
    Traditional,
    Buyhold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Candle source shared by the replay commands: exactly one of a cache file
/// or a seeded synthetic walk.
#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Cache CSV produced by `fetch`.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Use a synthetic random walk instead of cached data.
    #[arg(long)]
    pub synthetic: bool,
    /// Walk seed (synthetic source).
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Walk length in candles (synthetic source).
    #[arg(long, default_value_t = 100_000)]
    pub steps: u64,
    /// Walk start price (synthetic source).
    #[arg(long, default_value_t = 100.0)]
    pub start_price: f64,
    /// Walk up-step probability (synthetic source).
    #[arg(long, default_value_t = 0.5)]
    pub p_up: f64,
    /// Walk step ratio (synthetic source); defaults to the strategy's grid size.
    #[arg(long)]
    pub walk_k: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_enum, default_value_t = StrategyArg::Dgt)]
    pub strategy: StrategyArg,
    /// Grid size k: adjacent levels differ by a factor 1 + k.
    #[arg(long, default_value_t = 0.01)]
    pub k: f64,
    /// Levels above and below the center.
    #[arg(long, default_value_t = 8)]
    pub half: usize,
    /// Asymmetric level count above (traditional grid only).
    #[arg(long)]
    pub n_above: Option<usize>,
    /// Asymmetric level count below (traditional grid only).
    #[arg(long)]
    pub n_below: Option<usize>,
    #[arg(long, default_value_t = 0.0008)]
    pub fee: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub principal: f64,
    /// Cap fills per candle (1 models at most one transaction per bar).
    #[arg(long)]
    pub max_fills_per_candle: Option<u32>,
    /// Keep every Nth equity point in the report.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Report file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Grid sizes to sweep.
    #[arg(long = "k-list", value_delimiter = ',', default_values_t = vec![0.002, 0.005, 0.01, 0.02, 0.03, 0.05])]
    pub k_list: Vec<f64>,
    /// Half counts to sweep.
    #[arg(long = "half-list", value_delimiter = ',', default_values_t = vec![3, 5, 8, 12, 20, 30])]
    pub half_list: Vec<usize>,
    #[arg(long, value_enum, default_value_t = StrategyArg::Dgt)]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = 0.0008)]
    pub fee: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub principal: f64,
    /// Max parallel sweep cells (default: rayon's global pool).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Keep every Nth equity point in cell reports.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct VerifyEvArgs {
    /// Even grid counts to verify.
    #[arg(long = "n-list", value_delimiter = ',', default_values_t = vec![2, 4, 6, 8])]
    pub n_list: Vec<u32>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Principal M for the quote-denominated closed forms.
    #[arg(long, default_value_t = 600.0)]
    pub principal: f64,
    /// JSON report file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Dynamic-grid grid size.
    #[arg(long, default_value_t = 0.01)]
    pub k: f64,
    /// Dynamic-grid half count.
    #[arg(long, default_value_t = 8)]
    pub half: usize,
    #[arg(long, default_value_t = 0.0008)]
    pub fee: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub principal: f64,
    /// Fixed-bound grid lower limit (default: just below the series low).
    #[arg(long)]
    pub lower: Option<f64>,
    /// Fixed-bound grid upper limit (default: just above the series high).
    #[arg(long)]
    pub upper: Option<f64>,
    /// Fixed-bound grid count.
    #[arg(long, default_value_t = 20)]
    pub bound_grids: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

/// Entry point for the binary: parses real process arguments.
pub fn run() -> i32 {
    run_from(std::env::args())
}

/// Parses and executes `args`; returns the process exit code. Kept separate
/// from [`run`] so tests can drive the CLI in-process.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let argv: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Fetch(args) => commands::cmd_fetch(&argv, args),
        Command::Backtest(args) => commands::cmd_backtest(&argv, args),
        Command::Sweep(args) => commands::cmd_sweep(&argv, args),
        Command::VerifyEv(args) => commands::cmd_verify_ev(&argv, args),
        Command::Compare(args) => commands::cmd_compare(&argv, args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}
