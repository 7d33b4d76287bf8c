//! Exchange klines REST client: wire-row parsing and paginated fetch.

use std::time::Duration;

use rust_decimal::Decimal;
use serde_json::Value;

use super::{Candle, CandleSeries, MarketDataError};

/// Environment variable overriding the klines API base URL.
pub const BASE_URL_ENV: &str = "GRIDBT_API_BASE";
/// Default spot API base.
pub const DEFAULT_BASE_URL: &str = "https://api.binance.com";

/// Documented endpoint maximum rows per request.
const PAGE_LIMIT: usize = 1000;

/// Parses one 12-element kline wire row.
///
/// Positions used: 0 open time (ms), 1-4 OHLC (decimal strings), 5 volume
/// (decimal string), 6 close time (ms). The rest are ignored. `row_index` is
/// the row's position in the page, used in error messages.
pub fn parse_kline_row(row_index: usize, row: &[Value]) -> Result<Candle, MarketDataError> {
    if row.len() != 12 {
        return Err(MarketDataError::RowArity {
            row: row_index,
            got: row.len(),
        });
    }
    let int_at = |pos: usize, field: &'static str| {
        row[pos].as_i64().ok_or_else(|| MarketDataError::RowField {
            row: row_index,
            field,
            reason: format!("expected integer timestamp, got {}", row[pos]),
        })
    };
    let dec_at = |pos: usize, field: &'static str| -> Result<Decimal, MarketDataError> {
        let s = row[pos].as_str().ok_or_else(|| MarketDataError::RowField {
            row: row_index,
            field,
            reason: format!("expected decimal string, got {}", row[pos]),
        })?;
        s.parse::<Decimal>().map_err(|e| MarketDataError::RowField {
            row: row_index,
            field,
            reason: format!("malformed decimal {s:?}: {e}"),
        })
    };

    Candle::new(
        int_at(0, "open_time")?,
        dec_at(1, "open")?,
        dec_at(2, "high")?,
        dec_at(3, "low")?,
        dec_at(4, "close")?,
        dec_at(5, "volume")?,
        int_at(6, "close_time")?,
    )
    .map_err(|e| MarketDataError::RowField {
        row: row_index,
        field: "candle",
        reason: e.to_string(),
    })
}

/// Result of a paginated fetch. `error` is set when the fetch stopped early;
/// `series` then holds everything retrieved before the failure.
#[derive(Debug)]
pub struct FetchOutcome {
    pub series: CandleSeries,
    pub error: Option<MarketDataError>,
}

/// Synchronous klines client. Requests are sequential (single-flight), with
/// bounded exponential backoff on transport errors and 5xx, and an honored
/// advisory wait on 429.
pub struct KlineClient {
    agent: ureq::Agent,
    base_url: String,
    max_retries: u32,
    backoff_base: Duration,
    backoff_cap: Duration,
}

impl KlineClient {
    pub fn new(base_url: impl Into<String>) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build();
        Self {
            agent: config.new_agent(),
            base_url: base_url.into(),
            max_retries: 5,
            backoff_base: Duration::from_millis(250),
            backoff_cap: Duration::from_secs(30),
        }
    }

    /// Base URL from `GRIDBT_API_BASE`, falling back to the public endpoint.
    pub fn from_env() -> Self {
        let base = std::env::var(BASE_URL_ENV).unwrap_or_else(|_| DEFAULT_BASE_URL.to_string());
        Self::new(base)
    }

    /// Shortens retry delays; used by tests against a local mock.
    pub fn with_backoff(mut self, max_retries: u32, base: Duration, cap: Duration) -> Self {
        self.max_retries = max_retries;
        self.backoff_base = base;
        self.backoff_cap = cap;
        self
    }

    /// Fetches all candles with `open_time` in `[start_ms, end_ms)`,
    /// paginating by `close_time + 1`. An empty window yields an empty
    /// series, not an error.
    pub fn fetch_klines(
        &self,
        symbol: &str,
        interval: &str,
        start_ms: i64,
        end_ms: i64,
    ) -> Result<CandleSeries, MarketDataError> {
        let outcome = self.fetch_klines_partial(symbol, interval, start_ms, end_ms);
        match outcome.error {
            Some(err) => Err(err),
            None => Ok(outcome.series),
        }
    }

    /// Like [`fetch_klines`](Self::fetch_klines) but keeps partial progress
    /// when a page ultimately fails, so callers can persist what arrived.
    pub fn fetch_klines_partial(
        &self,
        symbol: &str,
        interval: &str,
        start_ms: i64,
        end_ms: i64,
    ) -> FetchOutcome {
        let mut candles: Vec<Candle> = Vec::new();
        let mut cursor = start_ms;
        let mut error = None;

        while cursor < end_ms {
            let url = format!(
                "{}/api/v3/klines?symbol={}&interval={}&startTime={}&endTime={}&limit={}",
                self.base_url.trim_end_matches('/'),
                symbol,
                interval,
                cursor,
                end_ms - 1,
                PAGE_LIMIT
            );
            let rows = match self.get_page(&url) {
                Ok(rows) => rows,
                Err(e) => {
                    error = Some(e);
                    break;
                }
            };
            if rows.is_empty() {
                break;
            }
            let page_len = rows.len();
            let mut last_close_time = cursor;
            for (i, row) in rows.iter().enumerate() {
                let arr = match row.as_array() {
                    Some(arr) => arr,
                    None => {
                        error = Some(MarketDataError::BadResponse {
                            url: url.clone(),
                            reason: format!("row {i} is not an array"),
                        });
                        break;
                    }
                };
                match parse_kline_row(i, arr) {
                    Ok(c) => {
                        last_close_time = c.close_time;
                        // Upstream endTime is inclusive; enforce our half-open window.
                        if c.open_time < end_ms {
                            candles.push(c);
                        }
                    }
                    Err(e) => {
                        error = Some(e);
                        break;
                    }
                }
            }
            if error.is_some() || page_len < PAGE_LIMIT {
                break;
            }
            cursor = last_close_time + 1;
        }

        match CandleSeries::new(symbol, candles) {
            Ok(series) => FetchOutcome { series, error },
            Err(e) => FetchOutcome {
                series: CandleSeries::new(symbol, Vec::new()).expect("empty series"),
                error: Some(error.unwrap_or(e)),
            },
        }
    }

    fn get_page(&self, url: &str) -> Result<Vec<Value>, MarketDataError> {
        let mut attempt: u32 = 0;
        loop {
            let result = self.agent.get(url).call();
            match result {
                Ok(mut response) => {
                    let status = response.status().as_u16();
                    if (200..300).contains(&status) {
                        let body: Value = response.body_mut().read_json().map_err(|e| {
                            MarketDataError::BadResponse {
                                url: url.to_string(),
                                reason: e.to_string(),
                            }
                        })?;
                        return body
                            .as_array()
                            .cloned()
                            .ok_or_else(|| MarketDataError::BadResponse {
                                url: url.to_string(),
                                reason: "expected a JSON array of rows".into(),
                            });
                    }
                    let retryable = status == 429 || (500..600).contains(&status);
                    if !retryable || attempt >= self.max_retries {
                        return Err(MarketDataError::HttpStatus {
                            status,
                            url: url.to_string(),
                        });
                    }
                    let wait = if status == 429 {
                        self.retry_after(&response)
                            .unwrap_or_else(|| self.backoff(attempt))
                    } else {
                        self.backoff(attempt)
                    };
                    std::thread::sleep(wait);
                }
                Err(e) => {
                    if attempt >= self.max_retries {
                        return Err(MarketDataError::Transport {
                            url: url.to_string(),
                            reason: e.to_string(),
                        });
                    }
                    std::thread::sleep(self.backoff(attempt));
                }
            }
            attempt += 1;
        }
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let exp = self.backoff_base.saturating_mul(1u32 << attempt.min(16));
        exp.min(self.backoff_cap)
    }

    fn retry_after(&self, response: &ureq::http::Response<ureq::Body>) -> Option<Duration> {
        let secs = response
            .headers()
            .get("retry-after")?
            .to_str()
            .ok()?
            .parse::<u64>()
            .ok()?;
        Some(Duration::from_secs(secs).min(self.backoff_cap))
    }
}
