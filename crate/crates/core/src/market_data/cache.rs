//! CSV candle cache.
//!
//! Layout: header `open_time,open,high,low,close,volume,close_time`, one row
//! per candle, prices as decimal text, UTF-8, LF line endings. Decimal text is
//! written exactly as held, so `load_cache(store_cache(s))` reproduces `s`
//! bit-exactly. The series symbol is taken from the file stem on load.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rust_decimal::Decimal;

use super::{Candle, CandleSeries, MarketDataError};

const HEADER: &str = "open_time,open,high,low,close,volume,close_time";

pub fn store_cache(series: &CandleSeries, path: &Path) -> Result<(), MarketDataError> {
    let mut out = String::with_capacity(series.candles.len() * 64 + HEADER.len() + 1);
    out.push_str(HEADER);
    out.push('\n');
    for c in &series.candles {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.open_time, c.open, c.high, c.low, c.close, c.volume, c.close_time
        ));
    }
    fs::write(path, out).map_err(|source| MarketDataError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_cache(path: &Path) -> Result<CandleSeries, MarketDataError> {
    let text = fs::read_to_string(path).map_err(|source| MarketDataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let path_str = path.display().to_string();
    let malformed = |line: usize, reason: String| MarketDataError::MalformedLine {
        path: path_str.clone(),
        line,
        reason,
    };

    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first == HEADER => {}
        Some((_, first)) => {
            return Err(malformed(1, format!("bad header {first:?}, expected {HEADER:?}")))
        }
        None => return Err(malformed(1, "empty file, expected header".into())),
    }

    let mut candles = Vec::new();
    let mut prev_time: Option<i64> = None;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(malformed(line_no, format!("expected 7 fields, got {}", fields.len())));
        }
        let ts = |s: &str, name: &str| {
            s.parse::<i64>()
                .map_err(|e| malformed(line_no, format!("bad {name} {s:?}: {e}")))
        };
        let dec = |s: &str, name: &str| {
            s.parse::<Decimal>()
                .map_err(|e| malformed(line_no, format!("bad {name} {s:?}: {e}")))
        };
        let candle = Candle::new(
            ts(fields[0], "open_time")?,
            dec(fields[1], "open")?,
            dec(fields[2], "high")?,
            dec(fields[3], "low")?,
            dec(fields[4], "close")?,
            dec(fields[5], "volume")?,
            ts(fields[6], "close_time")?,
        )
        .map_err(|e| malformed(line_no, e.to_string()))?;

        if let Some(prev) = prev_time {
            if candle.open_time == prev {
                return Err(malformed(line_no, "duplicate timestamp".into()));
            }
            if candle.open_time < prev {
                return Err(malformed(line_no, "non-monotonic timestamp".into()));
            }
        }
        prev_time = Some(candle.open_time);
        candles.push(candle);
    }

    let symbol = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("SERIES")
        .to_string();
    CandleSeries::new(symbol, candles)
}

/// Merges two series over the same symbol by `open_time`; on collision the
/// fresher candle wins. Used to extend a cache idempotently.
pub fn merge_series(
    existing: &CandleSeries,
    fresh: &CandleSeries,
) -> Result<CandleSeries, MarketDataError> {
    let mut by_time: BTreeMap<i64, Candle> = BTreeMap::new();
    for c in &existing.candles {
        by_time.insert(c.open_time, c.clone());
    }
    for c in &fresh.candles {
        by_time.insert(c.open_time, c.clone());
    }
    CandleSeries::new(existing.symbol.clone(), by_time.into_values().collect())
}
