//! Candle replay, portfolio metrics and the parameter sweep.

mod metrics;
mod output;
mod replay;
mod sweep;

pub use metrics::{irr, mdd, MS_PER_YEAR};
pub use output::sweep_to_csv;
pub use replay::{
    run_backtest, run_buy_and_hold, run_fixed_bound_grid, ReplayOptions, StrategyKind,
};
pub use sweep::run_sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid_engine::{BreakDirection, EngineError};
use crate::market_data::MarketDataError;

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("empty candle series")]
    EmptySeries,
    #[error("invalid metric input: {0}")]
    BadMetricInput(String),
    #[error("invalid sweep input: {0}")]
    BadSweepInput(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    MarketData(#[from] MarketDataError),
}

/// Marked portfolio value at one candle close.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquityPoint {
    pub time_ms: i64,
    pub equity: f64,
}

/// Wallet bookkeeping captured at a dynamic-grid reset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResetSnapshot {
    pub time_ms: i64,
    pub direction: BreakDirection,
    pub wallet: f64,
    pub input_money: f64,
}

/// Breakout that ended a bounded grid's trading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Termination {
    pub time_ms: i64,
    pub direction: BreakDirection,
}

/// Everything a replay produces. The equity curve may be down-sampled by the
/// requested stride (last point always kept); `mdd` is always computed on
/// the full-resolution curve before down-sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub irr: f64,
    pub mdd: f64,
    pub trade_count: u64,
    pub reset_count: u64,
    pub final_equity: f64,
    pub equity_curve: Vec<EquityPoint>,
    pub reset_snapshots: Vec<ResetSnapshot>,
    pub termination: Option<Termination>,
}

impl BacktestReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// One sweep cell: the parameter pair and its independent backtest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub grid_size: f64,
    pub half: usize,
    pub report: BacktestReport,
}

/// The sweep result matrix, one cell per `(grid_size, half)` pair in
/// row-major order over the input lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub grid_sizes: Vec<f64>,
    pub half_counts: Vec<usize>,
    pub cells: Vec<SweepCell>,
}

impl SweepGrid {
    pub fn best_by_irr(&self) -> Option<&SweepCell> {
        self.cells
            .iter()
            .filter(|c| c.report.irr.is_finite())
            .max_by(|a, b| a.report.irr.total_cmp(&b.report.irr))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep serializes")
    }
}
