//! Candle acquisition, validation, caching and synthesis.
//!
//! Prices are carried as exact decimals end to end (wire string -> cache
//! file -> back) so that cached series round-trip bit-exactly. The replay
//! engine converts to `f64` once, at replay time.

mod cache;
mod klines;
mod walk;

pub use cache::{load_cache, merge_series, store_cache};
pub use klines::{parse_kline_row, FetchOutcome, KlineClient, BASE_URL_ENV, DEFAULT_BASE_URL};
pub use walk::synth_random_walk;

use rust_decimal::prelude::ToPrimitive;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Milliseconds per 1-minute bar.
pub const MINUTE_MS: i64 = 60_000;

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("row {row}: expected 12 kline fields, got {got}")]
    RowArity { row: usize, got: usize },
    #[error("row {row}, field {field}: {reason}")]
    RowField {
        row: usize,
        field: &'static str,
        reason: String,
    },
    #[error("invalid candle: {0}")]
    InvalidCandle(String),
    #[error("non-monotonic timestamp at index {index}")]
    NonMonotonic { index: usize },
    #[error("{path}, line {line}: {reason}")]
    MalformedLine {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("invalid walk parameters: {0}")]
    InvalidWalk(String),
    #[error("walk price out of range at step {step}")]
    WalkRange { step: usize },
    #[error("http status {status} from {url}")]
    HttpStatus { status: u16, url: String },
    #[error("transport error calling {url}: {reason}")]
    Transport { url: String, reason: String },
    #[error("malformed kline response from {url}: {reason}")]
    BadResponse { url: String, reason: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One OHLCV bar. Timestamps are Unix-epoch milliseconds; `open_time` is the
/// bar's open, `close_time` its last millisecond.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candle {
    pub open_time: i64,
    pub open: Decimal,
    pub high: Decimal,
    pub low: Decimal,
    pub close: Decimal,
    pub volume: Decimal,
    pub close_time: i64,
}

impl Candle {
    /// Builds a candle, enforcing the bar invariants: positive prices,
    /// `low <= min(open, close)`, `high >= max(open, close)`, non-negative
    /// volume and `close_time > open_time`.
    pub fn new(
        open_time: i64,
        open: Decimal,
        high: Decimal,
        low: Decimal,
        close: Decimal,
        volume: Decimal,
        close_time: i64,
    ) -> Result<Self, MarketDataError> {
        if open <= Decimal::ZERO || high <= Decimal::ZERO || low <= Decimal::ZERO || close <= Decimal::ZERO {
            return Err(MarketDataError::InvalidCandle("non-positive price".into()));
        }
        if high < low {
            return Err(MarketDataError::InvalidCandle("inverted range".into()));
        }
        if low > open.min(close) || high < open.max(close) {
            return Err(MarketDataError::InvalidCandle(
                "open/close outside [low, high]".into(),
            ));
        }
        if volume < Decimal::ZERO {
            return Err(MarketDataError::InvalidCandle("negative volume".into()));
        }
        if close_time <= open_time {
            return Err(MarketDataError::InvalidCandle(
                "close_time not after open_time".into(),
            ));
        }
        Ok(Self {
            open_time,
            open,
            high,
            low,
            close,
            volume,
            close_time,
        })
    }

    pub fn open_f64(&self) -> f64 {
        self.open.to_f64().unwrap_or(f64::NAN)
    }

    pub fn close_f64(&self) -> f64 {
        self.close.to_f64().unwrap_or(f64::NAN)
    }
}

/// An ordered 1-minute candle series for one symbol.
///
/// Immutable after construction; `open_time` is strictly increasing. Gaps are
/// allowed and reported by [`validate_series`], never filled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandleSeries {
    pub symbol: String,
    pub interval_ms: i64,
    pub candles: Vec<Candle>,
}

impl CandleSeries {
    pub fn new(symbol: impl Into<String>, candles: Vec<Candle>) -> Result<Self, MarketDataError> {
        for (i, pair) in candles.windows(2).enumerate() {
            if pair[1].open_time <= pair[0].open_time {
                return Err(MarketDataError::NonMonotonic { index: i + 1 });
            }
        }
        Ok(Self {
            symbol: symbol.into(),
            interval_ms: MINUTE_MS,
            candles,
        })
    }

    pub fn len(&self) -> usize {
        self.candles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candles.is_empty()
    }

    /// Close prices converted to `f64` for replay.
    pub fn closes_f64(&self) -> Vec<f64> {
        self.candles.iter().map(Candle::close_f64).collect()
    }
}

/// A detected hole in a series: `missing_bars` whole bars are absent starting
/// at `gap_start_ms`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    pub gap_start_ms: i64,
    pub missing_bars: u64,
}

/// Scans a series for missing bars. Gaps are reported, not filled; the input
/// is never mutated. Equal or decreasing timestamps are a hard error.
pub fn validate_series(series: &CandleSeries) -> Result<Vec<Gap>, MarketDataError> {
    let mut gaps = Vec::new();
    let interval = series.interval_ms;
    for (i, pair) in series.candles.windows(2).enumerate() {
        let delta = pair[1].open_time - pair[0].open_time;
        if delta <= 0 {
            return Err(MarketDataError::NonMonotonic { index: i + 1 });
        }
        if delta > interval {
            gaps.push(Gap {
                gap_start_ms: pair[0].open_time + interval,
                missing_bars: ((delta - 1) / interval) as u64,
            });
        }
    }
    Ok(gaps)
}

/// Parameters of a synthetic multiplicative random walk: each bar the price
/// moves by a factor `1 + step_ratio` (up, probability `p_up`) or its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    pub start_price: f64,
    pub step_ratio: f64,
    pub p_up: f64,
    pub n_steps: u64,
    pub seed: u64,
}

impl WalkParams {
    pub(crate) fn validate(&self) -> Result<(), MarketDataError> {
        if !(self.start_price.is_finite() && self.start_price > 0.0) {
            return Err(MarketDataError::InvalidWalk("start_price must be positive".into()));
        }
        if !(self.step_ratio > 0.0 && self.step_ratio < 1.0) {
            return Err(MarketDataError::InvalidWalk(
                "step_ratio must be in (0, 1)".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.p_up) {
            return Err(MarketDataError::InvalidWalk("p_up must be in [0, 1]".into()));
        }
        if self.n_steps == 0 {
            return Err(MarketDataError::InvalidWalk("n_steps must be positive".into()));
        }
        Ok(())
    }
}
