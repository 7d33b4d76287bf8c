//! Strategy stepping: the bounded grid that terminates on breakout and the
//! dynamic grid that recenters instead.

use serde::{Deserialize, Serialize};

use super::ladder::{build_ladder, crossings, Ladder, TOUCH_EPS};
use super::portfolio::{apply_cross, initial_allocation, PortfolioState};
use super::{EngineError, Fill, GridSpec, StrategyOutcome, StrategyStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BreakDirection {
    Above,
    Below,
}

/// Applies every level crossed between the black level and `close`, nearest
/// first, honoring `max_fills_per_candle`. Returns the fills and whether the
/// crossing list was cut short by the cap.
fn fill_crossings(
    state: &mut PortfolioState,
    ladder: &mut Ladder,
    spec: &GridSpec,
    time_ms: i64,
    close: f64,
) -> Result<(Vec<Fill>, bool), EngineError> {
    let events = crossings(ladder, close);
    let cap = spec
        .max_fills_per_candle
        .map(|c| c as usize)
        .unwrap_or(usize::MAX);
    let truncated = events.len() > cap;
    let mut fills = Vec::with_capacity(events.len().min(cap));
    for event in events.into_iter().take(cap) {
        fills.push(apply_cross(state, ladder, spec, event, time_ms)?);
    }
    Ok((fills, truncated))
}

fn breakout(ladder: &Ladder, close: f64) -> Option<BreakDirection> {
    if close > ladder.top() * (1.0 + TOUCH_EPS) {
        Some(BreakDirection::Above)
    } else if close < ladder.bottom() * (1.0 - TOUCH_EPS) {
        Some(BreakDirection::Below)
    } else {
        None
    }
}

/// Advances the bounded grid by one candle close.
///
/// Fills every crossed level in order, then terminates if the close lies
/// strictly outside the ladder: above the top all base has already been sold
/// by the final 1/1 fill, below the bottom all quote has been spent. When the
/// per-candle fill cap cut the crossing list short, termination is deferred
/// until the remaining levels have filled on later candles.
pub fn step_traditional(
    state: &mut PortfolioState,
    ladder: &mut Ladder,
    spec: &GridSpec,
    time_ms: i64,
    close: f64,
) -> Result<StrategyOutcome, EngineError> {
    let (events, truncated) = fill_crossings(state, ladder, spec, time_ms, close)?;
    let status = if truncated {
        StrategyStatus::Active
    } else {
        match breakout(ladder, close) {
            Some(BreakDirection::Above) => StrategyStatus::TerminatedAbove,
            Some(BreakDirection::Below) => StrategyStatus::TerminatedBelow,
            None => StrategyStatus::Active,
        }
    };
    Ok(StrategyOutcome { status, events })
}

/// Rebuilds the grid after a breakout, with `new_center` as the new
/// reference price.
///
/// Above: the grid's working equity in excess of its principal is banked in
/// the wallet and the same principal is redeployed. Below: the held base is
/// parked in the carry account and the wallet (clamped at zero) becomes the
/// new principal; if that is below `spec.min_principal` the grid goes
/// dormant and `None` is returned in place of a ladder.
///
/// `current_principal` is the capital the outgoing grid was running;
/// it is updated in place on a downward reset. External capital is never
/// added: `input_money` is untouched.
pub fn reset_grid(
    state: &mut PortfolioState,
    spec: &GridSpec,
    current_principal: &mut f64,
    new_center: f64,
    direction: BreakDirection,
    time_ms: i64,
) -> Result<(Option<Ladder>, Option<Fill>), EngineError> {
    match direction {
        BreakDirection::Above => {
            let grid_equity = state.quote + state.base * new_center;
            state.wallet += grid_equity - *current_principal;
            state.quote = *current_principal;
            state.base = 0.0;
            let ladder = build_ladder(new_center, spec)?;
            let fill =
                initial_allocation(state, &ladder, spec, *current_principal, new_center, time_ms)?;
            Ok((Some(ladder), fill))
        }
        BreakDirection::Below => {
            state.carry_base += state.base;
            state.base = 0.0;
            // Whatever quote is left joins the wallet before re-arming; a
            // full downward sweep leaves exactly zero.
            state.wallet += state.quote;
            state.quote = 0.0;
            let fresh_principal = state.wallet.max(0.0);
            if fresh_principal < spec.min_principal {
                return Ok((None, None));
            }
            state.wallet -= fresh_principal;
            state.quote = fresh_principal;
            *current_principal = fresh_principal;
            let ladder = build_ladder(new_center, spec)?;
            let fill =
                initial_allocation(state, &ladder, spec, fresh_principal, new_center, time_ms)?;
            Ok((Some(ladder), fill))
        }
    }
}

/// The bounded grid with its own state, for replay loops.
#[derive(Debug, Clone)]
pub struct TraditionalGrid {
    spec: GridSpec,
    pub state: PortfolioState,
    ladder: Ladder,
    status: StrategyStatus,
}

impl TraditionalGrid {
    /// Builds the ladder at `start_price`, funds the portfolio with the
    /// principal and runs the opening allocation.
    pub fn open(spec: GridSpec, start_price: f64, time_ms: i64) -> Result<Self, EngineError> {
        let ladder = build_ladder(start_price, &spec)?;
        let mut state = PortfolioState::with_principal(spec.principal);
        initial_allocation(&mut state, &ladder, &spec, spec.principal, start_price, time_ms)?;
        Ok(Self {
            spec,
            state,
            ladder,
            status: StrategyStatus::Active,
        })
    }

    /// Wraps an externally prepared ladder and portfolio, e.g. one anchored
    /// to explicit bounds rather than centered on a reference price.
    pub fn from_parts(spec: GridSpec, state: PortfolioState, ladder: Ladder) -> Self {
        Self {
            spec,
            state,
            ladder,
            status: StrategyStatus::Active,
        }
    }

    pub fn step(&mut self, time_ms: i64, close: f64) -> Result<StrategyOutcome, EngineError> {
        if self.status != StrategyStatus::Active {
            return Ok(StrategyOutcome {
                status: self.status,
                events: Vec::new(),
            });
        }
        let outcome = step_traditional(&mut self.state, &mut self.ladder, &self.spec, time_ms, close)?;
        self.status = outcome.status;
        Ok(outcome)
    }

    pub fn status(&self) -> StrategyStatus {
        self.status
    }

    pub fn ladder(&self) -> &Ladder {
        &self.ladder
    }

    pub fn equity(&self, price: f64) -> f64 {
        self.state.equity(price)
    }
}

/// The dynamic grid: never terminates. Breakouts rebuild the ladder around
/// the breakout close; a downward reset with too small a wallet leaves the
/// grid dormant (pure hold of the carried base).
#[derive(Debug, Clone)]
pub struct DgtStrategy {
    spec: GridSpec,
    pub state: PortfolioState,
    ladder: Option<Ladder>,
    current_principal: f64,
}

impl DgtStrategy {
    pub fn open(spec: GridSpec, start_price: f64, time_ms: i64) -> Result<Self, EngineError> {
        if spec.n_above != spec.n_below {
            return Err(EngineError::InvalidSpec(
                "dynamic grid is symmetric: n_above must equal n_below".into(),
            ));
        }
        let ladder = build_ladder(start_price, &spec)?;
        let mut state = PortfolioState::with_principal(spec.principal);
        initial_allocation(&mut state, &ladder, &spec, spec.principal, start_price, time_ms)?;
        let current_principal = spec.principal;
        Ok(Self {
            spec,
            state,
            ladder: Some(ladder),
            current_principal,
        })
    }

    /// Advances one candle. Returns `ResetAbove`/`ResetBelow` on the candle
    /// that re-centers the grid; `Active` otherwise (including while
    /// dormant).
    pub fn step(&mut self, time_ms: i64, close: f64) -> Result<StrategyOutcome, EngineError> {
        let ladder = match self.ladder.as_mut() {
            Some(ladder) => ladder,
            None => {
                return Ok(StrategyOutcome {
                    status: StrategyStatus::Active,
                    events: Vec::new(),
                })
            }
        };
        let (mut events, truncated) =
            fill_crossings(&mut self.state, ladder, &self.spec, time_ms, close)?;
        if truncated {
            return Ok(StrategyOutcome {
                status: StrategyStatus::Active,
                events,
            });
        }
        let direction = match breakout(ladder, close) {
            Some(direction) => direction,
            None => {
                return Ok(StrategyOutcome {
                    status: StrategyStatus::Active,
                    events,
                })
            }
        };
        let (new_ladder, realloc) = reset_grid(
            &mut self.state,
            &self.spec,
            &mut self.current_principal,
            close,
            direction,
            time_ms,
        )?;
        self.ladder = new_ladder;
        events.extend(realloc);
        let status = match direction {
            BreakDirection::Above => StrategyStatus::ResetAbove,
            BreakDirection::Below => StrategyStatus::ResetBelow,
        };
        Ok(StrategyOutcome { status, events })
    }

    pub fn ladder(&self) -> Option<&Ladder> {
        self.ladder.as_ref()
    }

    /// Whether the grid is in the dormant pure-hold state.
    pub fn is_dormant(&self) -> bool {
        self.ladder.is_none()
    }

    pub fn current_principal(&self) -> f64 {
        self.current_principal
    }

    pub fn equity(&self, price: f64) -> f64 {
        self.state.equity(price)
    }
}
