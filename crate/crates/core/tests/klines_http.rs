//! Klines client tests against a local mock exchange.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use gridbt::market_data::{validate_series, KlineClient, MINUTE_MS};

/// Serves a deterministic 1-minute kline dataset over HTTP, with optional
/// injected failures before the first successful response.
struct MockExchange {
    base_url: String,
    requests: Arc<AtomicUsize>,
}

#[derive(Clone, Copy)]
struct FailPlan {
    times: usize,
    status: u16,
    retry_after: bool,
}

fn mock_price(minute: i64) -> String {
    // deterministic two-decimal wiggle
    format!("{}.{:02}", 100 + (minute % 7), (minute * 13) % 100)
}

fn row_json(minute: i64) -> String {
    let open_time = minute * MINUTE_MS;
    let p = mock_price(minute);
    format!(
        "[{open_time},\"{p}\",\"{p}\",\"{p}\",\"{p}\",\"1.0\",{},\"100.0\",1,\"0.5\",\"50.0\",\"0\"]",
        open_time + MINUTE_MS - 1
    )
}

fn query_param(url: &str, key: &str) -> Option<i64> {
    let query = url.split('?').nth(1)?;
    for pair in query.split('&') {
        let mut kv = pair.splitn(2, '=');
        if kv.next() == Some(key) {
            return kv.next()?.parse().ok();
        }
    }
    None
}

impl MockExchange {
    /// `total_minutes` bars exist, starting at epoch zero.
    fn start(total_minutes: i64, fail: Option<FailPlan>) -> Self {
        let server = tiny_http::Server::http("127.0.0.1:0").expect("bind mock server");
        let port = server.server_addr().to_ip().expect("ip addr").port();
        let requests = Arc::new(AtomicUsize::new(0));
        let seen = Arc::clone(&requests);
        std::thread::spawn(move || {
            let mut failures_left = fail.map(|f| f.times).unwrap_or(0);
            for request in server.incoming_requests() {
                seen.fetch_add(1, Ordering::SeqCst);
                if failures_left > 0 {
                    failures_left -= 1;
                    let plan = fail.expect("fail plan");
                    let mut response =
                        tiny_http::Response::from_string("slow down").with_status_code(plan.status);
                    if plan.retry_after {
                        response = response.with_header(
                            tiny_http::Header::from_bytes(&b"Retry-After"[..], &b"0"[..]).unwrap(),
                        );
                    }
                    let _ = request.respond(response);
                    continue;
                }
                let url = request.url().to_string();
                let start = query_param(&url, "startTime").unwrap_or(0);
                let end = query_param(&url, "endTime").unwrap_or(i64::MAX);
                let limit = query_param(&url, "limit").unwrap_or(1000).min(1000);
                let rows: Vec<String> = (0..total_minutes)
                    .map(|m| m * MINUTE_MS)
                    .filter(|t| *t >= start && *t <= end)
                    .take(limit as usize)
                    .map(|t| row_json(t / MINUTE_MS))
                    .collect();
                let body = format!("[{}]", rows.join(","));
                let response = tiny_http::Response::from_string(body).with_header(
                    tiny_http::Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..])
                        .unwrap(),
                );
                let _ = request.respond(response);
            }
        });
        Self {
            base_url: format!("http://127.0.0.1:{port}"),
            requests,
        }
    }

    fn client(&self) -> KlineClient {
        KlineClient::new(self.base_url.clone())
            .with_backoff(3, Duration::from_millis(1), Duration::from_millis(5))
    }

    fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

#[test]
fn a_1500_minute_window_takes_two_pages() {
    let mock = MockExchange::start(2000, None);
    let series = mock
        .client()
        .fetch_klines("TESTUSDT", "1m", 0, 1500 * MINUTE_MS)
        .unwrap();
    assert_eq!(series.len(), 1500);
    assert_eq!(mock.request_count(), 2);
    assert!(validate_series(&series).unwrap().is_empty());
    assert_eq!(series.symbol, "TESTUSDT");
}

#[test]
fn a_single_bar_window_is_one_candle() {
    let mock = MockExchange::start(10, None);
    let series = mock
        .client()
        .fetch_klines("TESTUSDT", "1m", 4 * MINUTE_MS, 5 * MINUTE_MS)
        .unwrap();
    assert_eq!(series.len(), 1);
    assert_eq!(series.candles[0].open_time, 4 * MINUTE_MS);
}

#[test]
fn an_empty_window_is_an_empty_series() {
    let mock = MockExchange::start(10, None);
    let series = mock
        .client()
        .fetch_klines("TESTUSDT", "1m", 100 * MINUTE_MS, 200 * MINUTE_MS)
        .unwrap();
    assert!(series.is_empty());
}

#[test]
fn rate_limited_fetch_matches_an_uninterrupted_one() {
    let throttled = MockExchange::start(
        300,
        Some(FailPlan {
            times: 1,
            status: 429,
            retry_after: true,
        }),
    );
    let clean = MockExchange::start(300, None);
    let window = 200 * MINUTE_MS;
    let a = throttled
        .client()
        .fetch_klines("TESTUSDT", "1m", 0, window)
        .unwrap();
    let b = clean
        .client()
        .fetch_klines("TESTUSDT", "1m", 0, window)
        .unwrap();
    assert_eq!(a, b);
    assert!(throttled.request_count() > clean.request_count());
}

#[test]
fn transient_server_errors_are_retried() {
    let flaky = MockExchange::start(
        100,
        Some(FailPlan {
            times: 2,
            status: 500,
            retry_after: false,
        }),
    );
    let series = flaky
        .client()
        .fetch_klines("TESTUSDT", "1m", 0, 50 * MINUTE_MS)
        .unwrap();
    assert_eq!(series.len(), 50);
}

#[test]
fn pagination_composes_over_any_interior_split() {
    let mock = MockExchange::start(2500, None);
    let client = mock.client();
    let end = 2200 * MINUTE_MS;
    let whole = client.fetch_klines("TESTUSDT", "1m", 0, end).unwrap();
    for split_minute in [1, 999, 1000, 1001, 2199] {
        let m = split_minute * MINUTE_MS;
        let left = client.fetch_klines("TESTUSDT", "1m", 0, m).unwrap();
        let right = client.fetch_klines("TESTUSDT", "1m", m, end).unwrap();
        let mut glued = left.candles.clone();
        glued.extend(right.candles.clone());
        assert_eq!(glued, whole.candles, "split at minute {split_minute}");
    }
}

#[test]
fn persistent_failure_keeps_partial_progress() {
    // One good page (1000 rows), then the server melts down for good.
    let server = tiny_http::Server::http("127.0.0.1:0").expect("bind");
    let port = server.server_addr().to_ip().unwrap().port();
    std::thread::spawn(move || {
        let mut served = false;
        for request in server.incoming_requests() {
            if !served {
                served = true;
                let rows: Vec<String> = (0..1000).map(row_json).collect();
                let _ = request.respond(tiny_http::Response::from_string(format!(
                    "[{}]",
                    rows.join(",")
                )));
            } else {
                let _ = request
                    .respond(tiny_http::Response::from_string("boom").with_status_code(500));
            }
        }
    });
    let client = KlineClient::new(format!("http://127.0.0.1:{port}"))
        .with_backoff(1, Duration::from_millis(1), Duration::from_millis(2));

    let outcome = client.fetch_klines_partial("TESTUSDT", "1m", 0, 3000 * MINUTE_MS);
    assert_eq!(outcome.series.len(), 1000);
    assert!(outcome.error.is_some());
    assert!(client
        .fetch_klines("TESTUSDT", "1m", 0, 3000 * MINUTE_MS)
        .is_err());
}
