//! Parallel parameter sweep over (grid size, half count) pairs.

use rayon::prelude::*;

use crate::grid_engine::GridSpec;
use crate::market_data::CandleSeries;

use super::replay::{run_backtest, ReplayOptions, StrategyKind};
use super::{BacktestError, SweepCell, SweepGrid};

/// Runs one independent backtest per `(grid_size, half)` pair over the shared
/// series. Cells are pure functions of their parameters, collected in input
/// order, so the result is bit-identical whether run serially or in parallel
/// and for any `jobs` value.
#[allow(clippy::too_many_arguments)]
pub fn run_sweep(
    series: &CandleSeries,
    grid_sizes: &[f64],
    half_counts: &[usize],
    principal: f64,
    fee_rate: f64,
    kind: StrategyKind,
    opts: &ReplayOptions,
    jobs: Option<usize>,
) -> Result<SweepGrid, BacktestError> {
    if grid_sizes.is_empty() || half_counts.is_empty() {
        return Err(BacktestError::BadSweepInput(
            "grid size and half count lists must be non-empty".into(),
        ));
    }
    let pairs: Vec<(f64, usize)> = grid_sizes
        .iter()
        .flat_map(|&k| half_counts.iter().map(move |&h| (k, h)))
        .collect();

    let run_cell = |&(grid_size, half): &(f64, usize)| -> Result<SweepCell, BacktestError> {
        let spec = GridSpec::symmetric(grid_size, half, fee_rate, principal)?;
        let report = run_backtest(series, &spec, kind, opts)?;
        Ok(SweepCell {
            grid_size,
            half,
            report,
        })
    };

    let cells: Result<Vec<SweepCell>, BacktestError> = match jobs {
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build()
                .map_err(|e| BacktestError::BadSweepInput(format!("thread pool: {e}")))?;
            pool.install(|| pairs.par_iter().map(run_cell).collect())
        }
        None => pairs.par_iter().map(run_cell).collect(),
    };

    Ok(SweepGrid {
        grid_sizes: grid_sizes.to_vec(),
        half_counts: half_counts.to_vec(),
        cells: cells?,
    })
}
