//! Portfolio state and the two fill primitives: the opening allocation and
//! level-cross execution.

use serde::{Deserialize, Serialize};

use super::ladder::{CrossDirection, CrossEvent, Ladder};
use super::{EngineError, Fill, GridSpec, Side};

/// Spot holdings plus the dynamic-grid bookkeeping accounts.
///
/// `quote` and `base` are the grid's working balances and never go negative.
/// `carry_base` is crypto parked by a downward grid reset: still owned and
/// marked to market, but excluded from grid fills. `wallet` is cumulative
/// realized arbitrage profit (signed once fees exist); `input_money` is the
/// external capital, constant after start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioState {
    pub quote: f64,
    pub base: f64,
    pub carry_base: f64,
    pub wallet: f64,
    pub input_money: f64,
    pub fills: Vec<Fill>,
}

impl PortfolioState {
    /// Fresh portfolio funded with `principal` quote units.
    pub fn with_principal(principal: f64) -> Self {
        Self {
            quote: principal,
            base: 0.0,
            carry_base: 0.0,
            wallet: 0.0,
            input_money: principal,
            fills: Vec::new(),
        }
    }

    /// Total marked value at `price`: working balances, carried crypto and
    /// wallet cash.
    pub fn equity(&self, price: f64) -> f64 {
        self.quote + (self.base + self.carry_base) * price + self.wallet
    }

    /// Value of the grid's working balances alone.
    pub fn grid_equity(&self, price: f64) -> f64 {
        self.quote + self.base * price
    }
}

/// Opening buy for a freshly built ladder: with `m` gray levels above the
/// current price out of `n` grids, spends `principal * m / n` at
/// `start_price` and keeps the rest as quote. Returns `None` when no levels
/// sit above (nothing to earmark for sells). `principal` is the capital this
/// grid deploys — `GridSpec::principal` at start, the re-armed principal after
/// a reset.
pub fn initial_allocation(
    state: &mut PortfolioState,
    ladder: &Ladder,
    spec: &GridSpec,
    principal: f64,
    start_price: f64,
    time_ms: i64,
) -> Result<Option<Fill>, EngineError> {
    let n = ladder.grid_count();
    let m = n - ladder.black_index();
    if m == 0 {
        return Ok(None);
    }
    let spend = principal * m as f64 / n as f64;
    if spend > state.quote * (1.0 + 1e-12) {
        return Err(EngineError::InsufficientQuote {
            need: spend,
            have: state.quote,
        });
    }
    let fee = spend * spec.fee_rate;
    let base_qty = spend * (1.0 - spec.fee_rate) / start_price;
    state.quote -= spend;
    state.base += base_qty;
    let fill = Fill {
        time_ms,
        side: Side::Buy,
        level_index: ladder.black_index(),
        price: start_price,
        base_qty,
        quote_delta: -spend,
        fee_paid: fee,
    };
    state.fills.push(fill);
    Ok(Some(fill))
}

/// Executes one level cross.
///
/// Upward cross of the `G`-th gray level counted from the top sells `1/G` of
/// the held base; downward cross of the `G`-th gray level counted from the
/// bottom spends `1/G` of the held quote. With the black level at index `b`,
/// an upward cross lands on `b + 1` and `G = n - b`; a downward cross lands
/// on `b - 1` and `G = b`. The crossed level becomes the new black level.
pub fn apply_cross(
    state: &mut PortfolioState,
    ladder: &mut Ladder,
    spec: &GridSpec,
    cross: CrossEvent,
    time_ms: i64,
) -> Result<Fill, EngineError> {
    let black = ladder.black_index();
    let n = ladder.grid_count();
    let price = ladder.levels()[cross.level_index];

    let fill = match cross.direction {
        CrossDirection::Up => {
            if cross.level_index != black + 1 {
                return Err(EngineError::InvariantViolation(format!(
                    "upward cross to {} with black at {black}",
                    cross.level_index
                )));
            }
            let g = n - black;
            if g == 0 {
                return Err(EngineError::InvariantViolation("upward cross with no gray levels above".into()));
            }
            let base_qty = state.base / g as f64;
            let notional = base_qty * price;
            let fee = notional * spec.fee_rate;
            state.base -= base_qty;
            state.quote += notional - fee;
            Fill {
                time_ms,
                side: Side::Sell,
                level_index: cross.level_index,
                price,
                base_qty,
                quote_delta: notional - fee,
                fee_paid: fee,
            }
        }
        CrossDirection::Down => {
            if black == 0 || cross.level_index != black - 1 {
                return Err(EngineError::InvariantViolation(format!(
                    "downward cross to {} with black at {black}",
                    cross.level_index
                )));
            }
            let g = black;
            let spend = state.quote / g as f64;
            let fee = spend * spec.fee_rate;
            let base_qty = spend * (1.0 - spec.fee_rate) / price;
            state.quote -= spend;
            state.base += base_qty;
            Fill {
                time_ms,
                side: Side::Buy,
                level_index: cross.level_index,
                price,
                base_qty,
                quote_delta: -spend,
                fee_paid: fee,
            }
        }
    };
    ladder.recolor(cross.level_index);
    state.fills.push(fill);
    Ok(fill)
}

#[cfg(test)]
mod tests {
    use super::super::ladder::{build_ladder, crossings};
    use super::*;

    fn approx(a: f64, b: f64) {
        assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn even_split_allocation() {
        let spec = GridSpec::new(0.1, 3, 3, 0.0, 1000.0).unwrap();
        let ladder = build_ladder(100.0, &spec).unwrap();
        let mut state = PortfolioState::with_principal(1000.0);
        let fill = initial_allocation(&mut state, &ladder, &spec, 1000.0, 100.0, 0)
            .unwrap()
            .unwrap();
        approx(fill.quote_delta, -500.0);
        approx(state.base, 5.0);
        approx(state.quote, 500.0);
    }

    #[test]
    fn lopsided_allocation_follows_levels_above() {
        let spec = GridSpec::new(0.1, 2, 4, 0.0, 1000.0).unwrap();
        let ladder = build_ladder(100.0, &spec).unwrap();
        let mut state = PortfolioState::with_principal(1000.0);
        initial_allocation(&mut state, &ladder, &spec, 1000.0, 100.0, 0).unwrap();
        approx(state.quote, 2000.0 / 3.0);
        approx(state.base, 10.0 / 3.0);
    }

    #[test]
    fn allocation_charges_the_fee_on_base() {
        let spec = GridSpec::new(0.1, 3, 3, 0.0008, 1000.0).unwrap();
        let ladder = build_ladder(100.0, &spec).unwrap();
        let mut state = PortfolioState::with_principal(1000.0);
        let fill = initial_allocation(&mut state, &ladder, &spec, 1000.0, 100.0, 0)
            .unwrap()
            .unwrap();
        approx(state.base, 4.996);
        approx(fill.fee_paid, 0.4);
    }

    #[test]
    fn upward_cross_sells_one_gth() {
        // n = 6 ladder, black at the center (index 3), cross up to index 4:
        // three gray levels remain at or above it, so sell a third.
        let spec = GridSpec::new(0.1, 3, 3, 0.0, 1000.0).unwrap();
        let mut ladder = build_ladder(100.0, &spec).unwrap();
        let mut state = PortfolioState::with_principal(1000.0);
        state.base = 3.0;
        state.quote = 0.0;
        let events = crossings(&ladder, 110.0);
        assert_eq!(events.len(), 1);
        let fill = apply_cross(&mut state, &mut ladder, &spec, events[0], 1).unwrap();
        approx(fill.base_qty, 1.0);
        assert_eq!(fill.side, Side::Sell);
        approx(state.base, 2.0);
        assert_eq!(ladder.black_index(), 4);
    }

    #[test]
    fn downward_cross_spends_one_gth() {
        let spec = GridSpec::new(0.1, 3, 3, 0.0, 1000.0).unwrap();
        let mut ladder = build_ladder(100.0, &spec).unwrap();
        let mut state = PortfolioState::with_principal(1000.0);
        state.quote = 300.0;
        let events = crossings(&ladder, 100.0 / 1.1);
        assert_eq!(events.len(), 1);
        let fill = apply_cross(&mut state, &mut ladder, &spec, events[0], 1).unwrap();
        assert_eq!(fill.side, Side::Buy);
        approx(fill.quote_delta, -100.0);
        approx(state.quote, 200.0);
        assert_eq!(ladder.black_index(), 2);
    }

    #[test]
    fn last_gray_above_sells_everything() {
        let spec = GridSpec::new(0.1, 1, 1, 0.0, 1000.0).unwrap();
        let mut ladder = build_ladder(100.0, &spec).unwrap();
        let mut state = PortfolioState::with_principal(1000.0);
        state.base = 5.0;
        state.quote = 500.0;
        let events = crossings(&ladder, 110.0);
        let fill = apply_cross(&mut state, &mut ladder, &spec, events[0], 1).unwrap();
        approx(fill.base_qty, 5.0);
        assert_eq!(state.base, 0.0);
    }

    #[test]
    fn recoloring_keeps_exactly_one_black_level() {
        let spec = GridSpec::new(0.05, 4, 4, 0.0, 1000.0).unwrap();
        let mut ladder = build_ladder(100.0, &spec).unwrap();
        let mut state = PortfolioState::with_principal(1000.0);
        initial_allocation(&mut state, &ladder, &spec, 1000.0, 100.0, 0).unwrap();
        for event in crossings(&ladder, 100.0 * 1.05f64.powi(3)) {
            apply_cross(&mut state, &mut ladder, &spec, event, 1).unwrap();
            assert_eq!(ladder.black_index(), event.level_index);
        }
        assert_eq!(ladder.black_index(), 7);
    }
}
