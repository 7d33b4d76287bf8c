//! Geometric grid ladder and strategy state machines.
//!
//! Two strategies share the same fill mechanics:
//!
//! - the bounded (traditional) grid, which terminates once the price leaves
//!   the ladder, and
//! - the dynamic grid, which instead rebuilds the ladder around the breakout
//!   price and keeps trading.
//!
//! Fills execute at the crossed level's price (resting limit-order
//! semantics), with a proportional fee on notional charged in quote currency
//! on both sides; buys receive base net of fee.

mod ladder;
mod portfolio;
mod strategy;

pub use ladder::{build_ladder, crossings, CrossDirection, CrossEvent, Ladder};
pub use portfolio::{apply_cross, initial_allocation, PortfolioState};
pub use strategy::{
    reset_grid, step_traditional, BreakDirection, DgtStrategy, TraditionalGrid,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default proportional fee on notional (level-1 maker rate).
pub const DEFAULT_FEE_RATE: f64 = 0.0008;
/// Default smallest principal a dynamic grid will re-arm with after a
/// downward reset; below this the grid goes dormant.
pub const DEFAULT_MIN_PRINCIPAL: f64 = 10.0;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),
    #[error("ladder level out of range: {0}")]
    LadderRange(String),
    #[error("insufficient quote: need {need}, have {have}")]
    InsufficientQuote { need: f64, have: f64 },
    #[error("engine invariant violated: {0}")]
    InvariantViolation(String),
}

/// Strategy parameters. `grid_size` is the per-level price ratio increment
/// (adjacent levels differ by a factor `1 + grid_size`); `n_above`/`n_below`
/// count the levels placed above and below the reference price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub grid_size: f64,
    pub n_above: usize,
    pub n_below: usize,
    pub fee_rate: f64,
    pub principal: f64,
    /// Dormancy threshold for downward resets of the dynamic grid.
    pub min_principal: f64,
    /// Cap on fills applied per candle; `None` fills every crossed level.
    /// Set to 1 to model at most one transaction per bar.
    pub max_fills_per_candle: Option<u32>,
}

impl GridSpec {
    pub fn new(
        grid_size: f64,
        n_above: usize,
        n_below: usize,
        fee_rate: f64,
        principal: f64,
    ) -> Result<Self, EngineError> {
        let spec = Self {
            grid_size,
            n_above,
            n_below,
            fee_rate,
            principal,
            min_principal: DEFAULT_MIN_PRINCIPAL,
            max_fills_per_candle: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// A grid with `half` levels above and below the center, as the dynamic
    /// strategy uses.
    pub fn symmetric(
        grid_size: f64,
        half: usize,
        fee_rate: f64,
        principal: f64,
    ) -> Result<Self, EngineError> {
        Self::new(grid_size, half, half, fee_rate, principal)
    }

    pub fn total_grids(&self) -> usize {
        self.n_above + self.n_below
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.grid_size > 0.0 && self.grid_size < 1.0) {
            return Err(EngineError::InvalidSpec("grid_size must be in (0, 1)".into()));
        }
        if self.n_above < 1 || self.n_below < 1 {
            return Err(EngineError::InvalidSpec(
                "need at least one level above and one below".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.fee_rate) {
            return Err(EngineError::InvalidSpec("fee_rate must be in [0, 1)".into()));
        }
        if !(self.principal > 0.0 && self.principal.is_finite()) {
            return Err(EngineError::InvalidSpec("principal must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Buy,
    Sell,
}

/// One executed trade at a grid level.
///
/// For sells, `quote_delta = +price * base_qty * (1 - fee_rate)`; for buys,
/// `quote_delta = -spend` and `base_qty = spend * (1 - fee_rate) / price`.
/// `fee_paid` is always in quote currency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fill {
    pub time_ms: i64,
    pub side: Side,
    pub level_index: usize,
    pub price: f64,
    pub base_qty: f64,
    pub quote_delta: f64,
    pub fee_paid: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategyStatus {
    Active,
    TerminatedAbove,
    TerminatedBelow,
    ResetAbove,
    ResetBelow,
}

/// What one candle did to the strategy: resulting status plus the fills it
/// triggered, in execution order.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyOutcome {
    pub status: StrategyStatus,
    pub events: Vec<Fill>,
}
