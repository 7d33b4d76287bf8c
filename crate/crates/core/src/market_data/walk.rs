//! Synthetic multiplicative random-walk series.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rust_decimal::prelude::FromPrimitive;
use rust_decimal::Decimal;

use super::{Candle, CandleSeries, MarketDataError, WalkParams, MINUTE_MS};

/// Generates a candle series where each bar's close is the previous close
/// times `(1 + k)` with probability `p_up`, or times `(1 + k)^-1` otherwise.
///
/// Deterministic for a fixed seed. Each close is computed as
/// `start_price * (1 + k)^offset` from the accumulated integer offset, so an
/// up step followed by a down step returns to the starting price to within a
/// few ulps and the series stays aligned with a grid ladder built from the
/// same ratio.
pub fn synth_random_walk(params: &WalkParams) -> Result<CandleSeries, MarketDataError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let ratio = 1.0 + params.step_ratio;

    let mut candles = Vec::with_capacity(params.n_steps as usize);
    let mut offset: i64 = 0;
    let mut prev_close = params.start_price;
    for step in 0..params.n_steps {
        offset += if rng.random_bool(params.p_up) { 1 } else { -1 };
        if offset.unsigned_abs() > i32::MAX as u64 {
            return Err(MarketDataError::WalkRange { step: step as usize });
        }
        let close = params.start_price * ratio.powi(offset as i32);
        if !close.is_finite() || close < f64::MIN_POSITIVE {
            return Err(MarketDataError::WalkRange { step: step as usize });
        }
        let open_time = step as i64 * MINUTE_MS;
        let open_d = to_decimal(prev_close, step as usize)?;
        let close_d = to_decimal(close, step as usize)?;
        let (high, low) = if close_d >= open_d {
            (close_d, open_d)
        } else {
            (open_d, close_d)
        };
        candles.push(
            Candle::new(open_time, open_d, high, low, close_d, Decimal::ZERO, open_time + MINUTE_MS - 1)
                .map_err(|e| MarketDataError::InvalidWalk(e.to_string()))?,
        );
        prev_close = close;
    }
    CandleSeries::new("SYNTH", candles)
}

fn to_decimal(x: f64, step: usize) -> Result<Decimal, MarketDataError> {
    Decimal::from_f64(x).ok_or(MarketDataError::WalkRange { step })
}
