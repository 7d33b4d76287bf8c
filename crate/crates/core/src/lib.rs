//! Deterministic backtesting and analytics for geometric grid trading.
//!
//! The crate is organized around four building blocks plus a CLI:
//!
//! - [`market_data`]: candle acquisition (exchange klines), CSV caching and
//!   synthetic random-walk series.
//! - [`grid_engine`]: the grid ladder and the two strategy state machines
//!   (a bounded grid that terminates on breakout, and a dynamic grid that
//!   recenters instead).
//! - [`analytics`]: closed-form expected-value results for the idealized
//!   symmetric-step model, verified by independent Monte Carlo walkers.
//! - [`backtest`]: candle replay, IRR/MDD metrics, comparator strategies and
//!   the parameter sweep.
//!
//! Everything that consumes randomness takes an explicit 64-bit seed and is
//! bit-reproducible across runs and thread counts.

// `!(x > 0.0)` rejects NaN along with non-positives; the positive phrasing
// would wave NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod backtest;
pub mod cli;
pub mod grid_engine;
pub mod market_data;

pub use backtest::{BacktestReport, SweepGrid};
pub use grid_engine::GridSpec;
pub use market_data::{Candle, CandleSeries, WalkParams};
