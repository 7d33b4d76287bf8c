//! Python bindings for the gridbt library: candle sources, the two grid
//! strategies, the benchmark comparators, the parameter sweep and the
//! expected-value analytics.
//!
//! Build the extension module with
//! `cargo build -p gridbt-py --release --features extension-module`, rename
//! `libgridbt_py.so` to `gridbt_py.so` somewhere on `sys.path`, and
//! `import gridbt_py`.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use gridbt::analytics::{self, TheoryParams};
use gridbt::backtest::{self, BacktestReport, ReplayOptions, StrategyKind};
use gridbt::grid_engine::{BreakDirection, GridSpec};
use gridbt::market_data::{self, CandleSeries, WalkParams};

fn value_err(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn io_err(err: impl std::fmt::Display) -> PyErr {
    PyIOError::new_err(err.to_string())
}

fn parse_strategy(name: &str) -> PyResult<StrategyKind> {
    match name {
        "dgt" => Ok(StrategyKind::Dgt),
        "traditional" => Ok(StrategyKind::Traditional),
        other => Err(value_err(format!(
            "unknown strategy {other:?}; expected \"dgt\" or \"traditional\""
        ))),
    }
}

/// A 1-minute candle series.
#[pyclass(name = "Series", skip_from_py_object)]
#[derive(Clone)]
struct PySeries {
    inner: CandleSeries,
}

#[pymethods]
impl PySeries {
    #[getter]
    fn symbol(&self) -> String {
        self.inner.symbol.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Series(symbol={:?}, candles={})", self.inner.symbol, self.inner.len())
    }

    /// Close prices as floats.
    fn closes(&self) -> Vec<f64> {
        self.inner.closes_f64()
    }

    /// (open_time_ms, missing_bars) for every hole in the series.
    fn gaps(&self) -> PyResult<Vec<(i64, u64)>> {
        let gaps = market_data::validate_series(&self.inner).map_err(value_err)?;
        Ok(gaps.into_iter().map(|g| (g.gap_start_ms, g.missing_bars)).collect())
    }

    /// Writes the series as a CSV cache file.
    fn save(&self, path: &str) -> PyResult<()> {
        market_data::store_cache(&self.inner, std::path::Path::new(path)).map_err(io_err)
    }
}

/// Monte Carlo run summary.
#[pyclass(name = "WalkStats", skip_from_py_object)]
#[derive(Clone)]
struct PyWalkStats {
    inner: analytics::WalkStats,
}

#[pymethods]
impl PyWalkStats {
    #[getter]
    fn mean_steps(&self) -> f64 {
        self.inner.mean_steps
    }

    #[getter]
    fn mean_pnl(&self) -> f64 {
        self.inner.mean_pnl
    }

    #[getter]
    fn std_error(&self) -> f64 {
        self.inner.std_error
    }

    #[getter]
    fn trials(&self) -> u64 {
        self.inner.trials
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn __repr__(&self) -> String {
        format!(
            "WalkStats(mean_steps={}, mean_pnl={}, std_error={}, trials={}, seed={})",
            self.inner.mean_steps,
            self.inner.mean_pnl,
            self.inner.std_error,
            self.inner.trials,
            self.inner.seed
        )
    }
}

/// Backtest result.
#[pyclass(name = "Report", skip_from_py_object)]
#[derive(Clone)]
struct PyReport {
    inner: BacktestReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn irr(&self) -> f64 {
        self.inner.irr
    }

    #[getter]
    fn mdd(&self) -> f64 {
        self.inner.mdd
    }

    #[getter]
    fn trade_count(&self) -> u64 {
        self.inner.trade_count
    }

    #[getter]
    fn reset_count(&self) -> u64 {
        self.inner.reset_count
    }

    #[getter]
    fn final_equity(&self) -> f64 {
        self.inner.final_equity
    }

    /// (time_ms, equity) points.
    fn equity_curve(&self) -> Vec<(i64, f64)> {
        self.inner
            .equity_curve
            .iter()
            .map(|p| (p.time_ms, p.equity))
            .collect()
    }

    /// (time_ms, direction, wallet, input_money) per grid reset.
    fn reset_snapshots(&self) -> Vec<(i64, String, f64, f64)> {
        self.inner
            .reset_snapshots
            .iter()
            .map(|s| {
                let direction = match s.direction {
                    BreakDirection::Above => "above".to_string(),
                    BreakDirection::Below => "below".to_string(),
                };
                (s.time_ms, direction, s.wallet, s.input_money)
            })
            .collect()
    }

    fn to_json(&self) -> String {
        self.inner.to_json_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "Report(irr={}, mdd={}, trades={}, resets={}, final_equity={})",
            self.inner.irr,
            self.inner.mdd,
            self.inner.trade_count,
            self.inner.reset_count,
            self.inner.final_equity
        )
    }
}

#[pyfunction]
fn profit_upper(principal: f64, n: u32) -> PyResult<f64> {
    analytics::profit_upper(principal, n).map_err(value_err)
}

#[pyfunction]
fn loss_lower(principal: f64, n: u32) -> PyResult<f64> {
    analytics::loss_lower(principal, n).map_err(value_err)
}

#[pyfunction]
fn linear_ev(principal: f64, n: u32) -> PyResult<f64> {
    analytics::linear_ev(principal, n).map_err(value_err)
}

#[pyfunction]
fn required_arbitrages(n: u32) -> PyResult<f64> {
    analytics::required_arbitrages(n).map_err(value_err)
}

#[pyfunction]
fn expected_crossings(n: u32) -> PyResult<f64> {
    analytics::expected_crossings(n).map_err(value_err)
}

#[pyfunction]
fn expected_arbitrage_value(n: u32) -> PyResult<f64> {
    analytics::expected_arbitrage_value(n).map_err(value_err)
}

#[pyfunction]
fn solve_recurrence(n: u32) -> PyResult<Vec<i64>> {
    analytics::solve_recurrence(n).map_err(value_err)
}

#[pyfunction]
fn mc_first_passage(n: u32, trials: u64, seed: u64) -> PyResult<PyWalkStats> {
    let inner = analytics::mc_first_passage(n, trials, seed).map_err(value_err)?;
    Ok(PyWalkStats { inner })
}

#[pyfunction]
#[pyo3(signature = (n, trials, seed, principal = 600.0, fee_rate = 0.0))]
fn mc_grid_ev(n: u32, trials: u64, seed: u64, principal: f64, fee_rate: f64) -> PyResult<PyWalkStats> {
    let params = TheoryParams::new(n, principal, 0.01, fee_rate).map_err(value_err)?;
    let inner = analytics::mc_grid_ev(&params, trials, seed).map_err(value_err)?;
    Ok(PyWalkStats { inner })
}

#[pyfunction]
#[pyo3(signature = (start_price, step_ratio, p_up, n_steps, seed))]
fn synth_walk(start_price: f64, step_ratio: f64, p_up: f64, n_steps: u64, seed: u64) -> PyResult<PySeries> {
    let inner = market_data::synth_random_walk(&WalkParams {
        start_price,
        step_ratio,
        p_up,
        n_steps,
        seed,
    })
    .map_err(value_err)?;
    Ok(PySeries { inner })
}

#[pyfunction]
fn load_cache(path: &str) -> PyResult<PySeries> {
    let inner = market_data::load_cache(std::path::Path::new(path)).map_err(io_err)?;
    Ok(PySeries { inner })
}

#[pyfunction]
#[pyo3(signature = (series, strategy, k, half, fee_rate = 0.0008, principal = 1000.0))]
fn run_backtest(
    series: &PySeries,
    strategy: &str,
    k: f64,
    half: usize,
    fee_rate: f64,
    principal: f64,
) -> PyResult<PyReport> {
    let kind = parse_strategy(strategy)?;
    let spec = GridSpec::symmetric(k, half, fee_rate, principal).map_err(value_err)?;
    let inner = backtest::run_backtest(&series.inner, &spec, kind, &ReplayOptions::default())
        .map_err(value_err)?;
    Ok(PyReport { inner })
}

#[pyfunction]
#[pyo3(signature = (series, principal = 1000.0, fee_rate = 0.0008))]
fn run_buy_and_hold(series: &PySeries, principal: f64, fee_rate: f64) -> PyResult<PyReport> {
    let inner = backtest::run_buy_and_hold(&series.inner, principal, fee_rate, &ReplayOptions::default())
        .map_err(value_err)?;
    Ok(PyReport { inner })
}

#[pyfunction]
#[pyo3(signature = (series, lower, upper, n, principal = 1000.0, fee_rate = 0.0008))]
fn run_fixed_bound_grid(
    series: &PySeries,
    lower: f64,
    upper: f64,
    n: usize,
    principal: f64,
    fee_rate: f64,
) -> PyResult<PyReport> {
    let inner = backtest::run_fixed_bound_grid(
        &series.inner,
        lower,
        upper,
        n,
        principal,
        fee_rate,
        &ReplayOptions::default(),
    )
    .map_err(value_err)?;
    Ok(PyReport { inner })
}

#[pyfunction]
#[pyo3(signature = (series, k_list, half_list, strategy = "dgt", fee_rate = 0.0008, principal = 1000.0, jobs = None))]
fn run_sweep(
    series: &PySeries,
    k_list: Vec<f64>,
    half_list: Vec<usize>,
    strategy: &str,
    fee_rate: f64,
    principal: f64,
    jobs: Option<usize>,
) -> PyResult<Vec<(f64, usize, PyReport)>> {
    let kind = parse_strategy(strategy)?;
    let sweep = backtest::run_sweep(
        &series.inner,
        &k_list,
        &half_list,
        principal,
        fee_rate,
        kind,
        &ReplayOptions::default(),
        jobs,
    )
    .map_err(value_err)?;
    Ok(sweep
        .cells
        .into_iter()
        .map(|cell| (cell.grid_size, cell.half, PyReport { inner: cell.report }))
        .collect())
}

#[pymodule]
fn gridbt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySeries>()?;
    m.add_class::<PyWalkStats>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(profit_upper, m)?)?;
    m.add_function(wrap_pyfunction!(loss_lower, m)?)?;
    m.add_function(wrap_pyfunction!(linear_ev, m)?)?;
    m.add_function(wrap_pyfunction!(required_arbitrages, m)?)?;
    m.add_function(wrap_pyfunction!(expected_crossings, m)?)?;
    m.add_function(wrap_pyfunction!(expected_arbitrage_value, m)?)?;
    m.add_function(wrap_pyfunction!(solve_recurrence, m)?)?;
    m.add_function(wrap_pyfunction!(mc_first_passage, m)?)?;
    m.add_function(wrap_pyfunction!(mc_grid_ev, m)?)?;
    m.add_function(wrap_pyfunction!(synth_walk, m)?)?;
    m.add_function(wrap_pyfunction!(load_cache, m)?)?;
    m.add_function(wrap_pyfunction!(run_backtest, m)?)?;
    m.add_function(wrap_pyfunction!(run_buy_and_hold, m)?)?;
    m.add_function(wrap_pyfunction!(run_fixed_bound_grid, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    Ok(())
}
