//! Expected-value theory of the symmetric grid and its Monte Carlo oracles.
//!
//! The closed forms live in step space: the price moves one grid level per
//! tick with equal probability, profits are counted in lots of
//! `principal / n` per level, and the strategy ends when the price has
//! drifted `n / 2` levels from the start. [`mc_grid_ev`] replays exactly that
//! model with a random walker; [`mc_engine_ev`] replays the real engine over
//! multiplicative walks as an end-to-end cross-check.

mod closed_form;
mod monte_carlo;

pub use closed_form::{
    expected_arbitrage_value, expected_crossings, linear_ev, loss_lower, profit_upper,
    required_arbitrages, solve_recurrence,
};
pub use monte_carlo::{
    engine_ev_trial, first_passage_trial, grid_ev_trial, mc_engine_ev, mc_first_passage,
    mc_grid_ev,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid_engine::{EngineError, GridSpec};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("grid count must be even, got {0}")]
    OddGridCount(u32),
    #[error("grid count must be at least 2, got {0}")]
    GridCountTooSmall(u32),
    #[error("invalid theory params: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

pub(crate) fn require_even(n: u32) -> Result<(), AnalyticsError> {
    if n < 2 {
        return Err(AnalyticsError::GridCountTooSmall(n));
    }
    if !n.is_multiple_of(2) {
        return Err(AnalyticsError::OddGridCount(n));
    }
    Ok(())
}

/// Parameters of the idealized step-space model: `n` grids, `principal`
/// quote units deployed, `step_ratio` only feeding the engine-level
/// counterpart, and a proportional fee per trade notional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub n: u32,
    pub principal: f64,
    pub step_ratio: f64,
    pub fee_rate: f64,
}

impl TheoryParams {
    pub fn new(n: u32, principal: f64, step_ratio: f64, fee_rate: f64) -> Result<Self, AnalyticsError> {
        require_even(n)?;
        if !(principal > 0.0) {
            return Err(AnalyticsError::InvalidParams("principal must be positive".into()));
        }
        if !(0.0..1.0).contains(&fee_rate) {
            return Err(AnalyticsError::InvalidParams("fee_rate must be in [0, 1)".into()));
        }
        Ok(Self {
            n,
            principal,
            step_ratio,
            fee_rate,
        })
    }

    /// The engine-level grid with the same geometry: `n/2` levels above and
    /// below, ratio `step_ratio`.
    pub fn engine_spec(&self) -> Result<GridSpec, AnalyticsError> {
        let half = (self.n / 2) as usize;
        Ok(GridSpec::symmetric(self.step_ratio, half, self.fee_rate, self.principal)?)
    }
}

/// Aggregate of a Monte Carlo run. `std_error` is the standard error of the
/// run's headline metric: mean steps for the first-passage walker, mean P&L
/// for the EV oracles. Always `sample_std / sqrt(trials)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkStats {
    pub mean_steps: f64,
    pub mean_pnl: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Deterministic mean and standard error, reduced in trial order so results
/// do not depend on how trials were partitioned across threads.
pub(crate) fn stats_of(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let std = (ss / (n as f64 - 1.0)).sqrt();
    (mean, std / (n as f64).sqrt())
}
