//! Return and drawdown metrics.

use super::{BacktestError, EquityPoint};

/// Milliseconds per 365-day year, the annualization basis for continuously
/// trading markets.
pub const MS_PER_YEAR: i64 = 31_536_000_000;

/// Annualized return: geometric annualization of the equity multiple over
/// elapsed wall time, `(final/initial)^(year/elapsed) - 1`.
pub fn irr(initial_equity: f64, final_equity: f64, elapsed_ms: i64) -> Result<f64, BacktestError> {
    if !(initial_equity > 0.0 && final_equity > 0.0) {
        return Err(BacktestError::BadMetricInput(
            "equities must be positive".into(),
        ));
    }
    if elapsed_ms <= 0 {
        return Err(BacktestError::BadMetricInput("elapsed time must be positive".into()));
    }
    let years = elapsed_ms as f64 / MS_PER_YEAR as f64;
    Ok((final_equity / initial_equity).powf(1.0 / years) - 1.0)
}

/// Maximum drawdown: the worst peak-to-trough decline fraction,
/// `max_t (peak_before_t - equity_t) / peak_before_t`.
pub fn mdd(curve: &[EquityPoint]) -> Result<f64, BacktestError> {
    if curve.is_empty() {
        return Err(BacktestError::BadMetricInput("empty equity curve".into()));
    }
    let mut peak = f64::MIN;
    let mut worst = 0.0f64;
    for point in curve {
        if !(point.equity > 0.0) {
            return Err(BacktestError::BadMetricInput(format!(
                "non-positive equity {} at {}",
                point.equity, point.time_ms
            )));
        }
        peak = peak.max(point.equity);
        worst = worst.max((peak - point.equity) / peak);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(values: &[f64]) -> Vec<EquityPoint> {
        values
            .iter()
            .enumerate()
            .map(|(i, &equity)| EquityPoint {
                time_ms: i as i64,
                equity,
            })
            .collect()
    }

    #[test]
    fn doubling_over_a_year_is_one() {
        assert_eq!(irr(100.0, 200.0, MS_PER_YEAR).unwrap(), 1.0);
    }

    #[test]
    fn doubling_over_two_years_is_sqrt_two_minus_one() {
        let got = irr(100.0, 200.0, 2 * MS_PER_YEAR).unwrap();
        assert!((got - (2f64.sqrt() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn flat_equity_is_zero_irr() {
        assert_eq!(irr(100.0, 100.0, 12345).unwrap(), 0.0);
    }

    #[test]
    fn irr_rejects_bad_input() {
        assert!(irr(0.0, 1.0, 1).is_err());
        assert!(irr(1.0, -1.0, 1).is_err());
        assert!(irr(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn drawdown_of_a_swing() {
        assert_eq!(mdd(&curve(&[100.0, 120.0, 60.0, 90.0])).unwrap(), 0.5);
    }

    #[test]
    fn monotone_rise_has_no_drawdown() {
        assert_eq!(mdd(&curve(&[1.0, 2.0, 3.0, 4.0])).unwrap(), 0.0);
    }

    #[test]
    fn later_deeper_trough_wins() {
        assert_eq!(mdd(&curve(&[100.0, 50.0, 100.0, 40.0])).unwrap(), 0.6);
    }

    #[test]
    fn empty_curve_is_an_error() {
        assert!(mdd(&[]).is_err());
    }
}
