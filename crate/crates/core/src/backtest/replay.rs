//! Deterministic candle replay for the grid strategies and the
//! buy-and-hold benchmark.
//!
//! Replays evaluate candle closes only: all levels crossed between
//! consecutive closes fill sequentially at their level prices. A bounded
//! grid that terminates stops trading but stays marked to market through the
//! series end, so its IRR and MDD remain comparable.

use crate::grid_engine::{
    initial_allocation, BreakDirection, DgtStrategy, GridSpec, Ladder, PortfolioState,
    StrategyOutcome, StrategyStatus, TraditionalGrid, DEFAULT_MIN_PRINCIPAL,
};
use crate::market_data::CandleSeries;

use super::metrics::{irr, mdd};
use super::{BacktestError, BacktestReport, EquityPoint, ResetSnapshot, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    Traditional,
    Dgt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplayOptions {
    /// Keep every `curve_stride`-th equity point in the report (plus the
    /// last). Metrics always use the full-resolution curve.
    pub curve_stride: usize,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        Self { curve_stride: 1 }
    }
}

struct ReplayTotals {
    curve: Vec<EquityPoint>,
    snapshots: Vec<ResetSnapshot>,
    termination: Option<Termination>,
    trade_count: u64,
}

fn finish_report(
    series: &CandleSeries,
    initial_equity: f64,
    totals: ReplayTotals,
    opts: &ReplayOptions,
) -> Result<BacktestReport, BacktestError> {
    let full_curve = totals.curve;
    let max_drawdown = mdd(&full_curve)?;
    let final_equity = full_curve.last().expect("non-empty curve").equity;
    let elapsed = series.candles.last().expect("non-empty").close_time
        - series.candles.first().expect("non-empty").open_time;
    let annualized = irr(initial_equity, final_equity, elapsed)?;

    let stride = opts.curve_stride.max(1);
    let last_idx = full_curve.len() - 1;
    let equity_curve: Vec<EquityPoint> = full_curve
        .into_iter()
        .enumerate()
        .filter(|(i, _)| i % stride == 0 || *i == last_idx)
        .map(|(_, p)| p)
        .collect();

    Ok(BacktestReport {
        irr: annualized,
        mdd: max_drawdown,
        trade_count: totals.trade_count,
        reset_count: totals.snapshots.len() as u64,
        final_equity,
        equity_curve,
        reset_snapshots: totals.snapshots,
        termination: totals.termination,
    })
}

/// Replays one strategy over a series. The grid is built at the first
/// candle's close; every candle marks equity at its close.
pub fn run_backtest(
    series: &CandleSeries,
    spec: &GridSpec,
    kind: StrategyKind,
    opts: &ReplayOptions,
) -> Result<BacktestReport, BacktestError> {
    if series.is_empty() {
        return Err(BacktestError::EmptySeries);
    }
    let first = &series.candles[0];
    let start_price = first.close_f64();
    let initial_equity = spec.principal;

    match kind {
        StrategyKind::Traditional => {
            let grid = TraditionalGrid::open(spec.clone(), start_price, first.close_time)?;
            replay_bounded(series, grid, opts, initial_equity)
        }
        StrategyKind::Dgt => {
            let mut dgt = DgtStrategy::open(spec.clone(), start_price, first.close_time)?;
            let mut totals = ReplayTotals {
                curve: Vec::with_capacity(series.len()),
                snapshots: Vec::new(),
                termination: None,
                trade_count: 0,
            };
            totals.curve.push(EquityPoint {
                time_ms: first.close_time,
                equity: dgt.equity(start_price),
            });
            for candle in &series.candles[1..] {
                let close = candle.close_f64();
                let outcome = dgt.step(candle.close_time, close)?;
                record_reset(&mut totals.snapshots, &outcome, &dgt.state, candle.close_time);
                totals.curve.push(EquityPoint {
                    time_ms: candle.close_time,
                    equity: dgt.equity(close),
                });
            }
            totals.trade_count = dgt.state.fills.len() as u64;
            finish_report(series, initial_equity, totals, opts)
        }
    }
}

fn record_reset(
    snapshots: &mut Vec<ResetSnapshot>,
    outcome: &StrategyOutcome,
    state: &PortfolioState,
    time_ms: i64,
) {
    let direction = match outcome.status {
        StrategyStatus::ResetAbove => BreakDirection::Above,
        StrategyStatus::ResetBelow => BreakDirection::Below,
        _ => return,
    };
    snapshots.push(ResetSnapshot {
        time_ms,
        direction,
        wallet: state.wallet,
        input_money: state.input_money,
    });
}

fn replay_bounded(
    series: &CandleSeries,
    mut grid: TraditionalGrid,
    opts: &ReplayOptions,
    initial_equity: f64,
) -> Result<BacktestReport, BacktestError> {
    let first = &series.candles[0];
    let mut totals = ReplayTotals {
        curve: Vec::with_capacity(series.len()),
        snapshots: Vec::new(),
        termination: None,
        trade_count: 0,
    };
    totals.curve.push(EquityPoint {
        time_ms: first.close_time,
        equity: grid.equity(first.close_f64()),
    });
    for candle in &series.candles[1..] {
        let close = candle.close_f64();
        if grid.status() == StrategyStatus::Active {
            let outcome = grid.step(candle.close_time, close)?;
            match outcome.status {
                StrategyStatus::TerminatedAbove => {
                    totals.termination = Some(Termination {
                        time_ms: candle.close_time,
                        direction: BreakDirection::Above,
                    })
                }
                StrategyStatus::TerminatedBelow => {
                    totals.termination = Some(Termination {
                        time_ms: candle.close_time,
                        direction: BreakDirection::Below,
                    })
                }
                _ => {}
            }
        }
        totals.curve.push(EquityPoint {
            time_ms: candle.close_time,
            equity: grid.equity(close),
        });
    }
    totals.trade_count = grid.state.fills.len() as u64;
    finish_report(series, initial_equity, totals, opts)
}

/// Buys once at the first close (fee-adjusted) and holds to the end.
pub fn run_buy_and_hold(
    series: &CandleSeries,
    principal: f64,
    fee_rate: f64,
    opts: &ReplayOptions,
) -> Result<BacktestReport, BacktestError> {
    if series.is_empty() {
        return Err(BacktestError::EmptySeries);
    }
    if !(principal > 0.0) {
        return Err(BacktestError::BadMetricInput("principal must be positive".into()));
    }
    let first = &series.candles[0];
    let base = principal * (1.0 - fee_rate) / first.close_f64();
    let totals = ReplayTotals {
        curve: series
            .candles
            .iter()
            .map(|c| EquityPoint {
                time_ms: c.close_time,
                equity: base * c.close_f64(),
            })
            .collect(),
        snapshots: Vec::new(),
        termination: None,
        trade_count: 1,
    };
    finish_report(series, principal, totals, opts)
}

/// A bounded grid with explicit price bounds: `n` grids from `lower` to
/// `upper`, ratio derived as `(upper/lower)^(1/n) - 1`. Never expected to
/// terminate while the bounds contain the series; if the price escapes
/// anyway the report records the termination.
pub fn run_fixed_bound_grid(
    series: &CandleSeries,
    lower: f64,
    upper: f64,
    n: usize,
    principal: f64,
    fee_rate: f64,
    opts: &ReplayOptions,
) -> Result<BacktestReport, BacktestError> {
    if series.is_empty() {
        return Err(BacktestError::EmptySeries);
    }
    let first = &series.candles[0];
    let start_price = first.close_f64();
    let (ladder, k) = Ladder::from_bounds(lower, upper, n, start_price)?;

    let black = ladder.black_index();
    let spec = GridSpec {
        grid_size: k,
        n_above: n - black,
        n_below: black,
        fee_rate,
        principal,
        min_principal: DEFAULT_MIN_PRINCIPAL,
        max_fills_per_candle: None,
    };
    let mut state = PortfolioState::with_principal(principal);
    initial_allocation(&mut state, &ladder, &spec, principal, start_price, first.close_time)?;
    let grid = TraditionalGrid::from_parts(spec, state, ladder);
    replay_bounded(series, grid, opts, principal)
}
