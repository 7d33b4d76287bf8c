//! Closed-form results for the symmetric step model.

use super::{require_even, AnalyticsError};

/// Profit, in quote units, of a linear rise through the whole grid:
/// `(M/n) * sum_{i=1..n/2} i`. The initial crypto is sold off in equal lots
/// of `M/n`, the lot sold `i` levels up having gained `i` level-steps.
pub fn profit_upper(principal: f64, n: u32) -> Result<f64, AnalyticsError> {
    require_even(n)?;
    let half = (n / 2) as u64;
    let sum = half * (half + 1) / 2;
    Ok(principal / n as f64 * sum as f64)
}

/// Loss, in quote units, of a linear fall through the whole grid:
/// `(M/n) * [(n/2)^2 + sum_{i=1..n/2-1} i]`. The opening lots ride down all
/// `n/2` levels; each lot bought `i` levels down still loses the remaining
/// `n/2 - i` when everything converts at the bottom.
pub fn loss_lower(principal: f64, n: u32) -> Result<f64, AnalyticsError> {
    require_even(n)?;
    let half = (n / 2) as u64;
    let sum = half * half + (half - 1) * half / 2;
    Ok(principal / n as f64 * sum as f64)
}

/// Expected value of the two linear extremes, `(P_u - L_l) / 2`; always
/// `-(M/n) * (n^2/8 - n/4)`.
pub fn linear_ev(principal: f64, n: u32) -> Result<f64, AnalyticsError> {
    Ok(0.5 * (profit_upper(principal, n)? - loss_lower(principal, n)?))
}

/// Number of completed arbitrages needed to offset the linear-move deficit:
/// `n^2/8 - n/4`. An integer for every even `n`.
pub fn required_arbitrages(n: u32) -> Result<f64, AnalyticsError> {
    require_even(n)?;
    let half = (n / 2) as u64;
    Ok((half * (half - 1) / 2) as f64)
}

/// Expected number of one-level steps before the walk has drifted `n/2`
/// levels either way: `(n/2)^2`.
pub fn expected_crossings(n: u32) -> Result<f64, AnalyticsError> {
    require_even(n)?;
    let half = (n / 2) as u64;
    Ok((half * half) as f64)
}

/// Solves the first-passage recurrence `E_i = 2 E_{i-1} - E_{i-2} - 2` with
/// `E_1 = E_0 - 1` and the boundary `E_{n/2} = 0`, returning
/// `[E_0, ..., E_{n/2}]`.
///
/// The solution is found from the boundary condition alone: every `E_m` is
/// linear in the unknown `E_0` with coefficient one, so running the
/// recurrence once with `E_0 = 0` gives offsets `b_m`, and the boundary
/// pins `E_0 = -b_{n/2}`.
pub fn solve_recurrence(n: u32) -> Result<Vec<i64>, AnalyticsError> {
    require_even(n)?;
    let half = (n / 2) as usize;
    let mut offsets = vec![0i64; half + 1];
    if half >= 1 {
        offsets[1] = -1;
    }
    for i in 2..=half {
        offsets[i] = 2 * offsets[i - 1] - offsets[i - 2] - 2;
    }
    let e0 = -offsets[half];
    Ok(offsets.into_iter().map(|b| e0 + b).collect())
}

/// Value, in arbitrage counts, of the expected transactions: the walk makes
/// `n^2/4` transactions on average, `n/2` of them are consumed by the
/// terminal drift, and a buy plus a sell make one arbitrage —
/// `(n^2/4 - n/2) / 2`.
pub fn expected_arbitrage_value(n: u32) -> Result<f64, AnalyticsError> {
    require_even(n)?;
    let half = (n / 2) as u64;
    Ok(((half * half - half) / 2) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headline_values_for_six_grids() {
        assert_eq!(profit_upper(600.0, 6).unwrap(), 600.0);
        assert_eq!(loss_lower(600.0, 6).unwrap(), 1200.0);
        assert_eq!(linear_ev(600.0, 6).unwrap(), -300.0);
        assert_eq!(required_arbitrages(6).unwrap(), 3.0);
        assert_eq!(expected_crossings(6).unwrap(), 9.0);
        assert_eq!(expected_arbitrage_value(6).unwrap(), 3.0);
    }

    #[test]
    fn smallest_grid() {
        assert_eq!(profit_upper(100.0, 2).unwrap(), 50.0);
        assert_eq!(loss_lower(100.0, 2).unwrap(), 50.0);
        assert_eq!(linear_ev(100.0, 2).unwrap(), 0.0);
        assert_eq!(required_arbitrages(2).unwrap(), 0.0);
        assert_eq!(expected_crossings(2).unwrap(), 1.0);
        assert_eq!(expected_arbitrage_value(2).unwrap(), 0.0);
    }

    #[test]
    fn four_and_eight_grids() {
        assert_eq!(profit_upper(400.0, 4).unwrap(), 300.0);
        assert_eq!(loss_lower(400.0, 4).unwrap(), 500.0);
        assert_eq!(linear_ev(400.0, 4).unwrap(), -100.0);
        assert_eq!(required_arbitrages(8).unwrap(), 6.0);
        assert_eq!(expected_arbitrage_value(8).unwrap(), 6.0);
        assert_eq!(expected_crossings(4).unwrap(), 4.0);
    }

    #[test]
    fn recurrence_solution_matches_the_square_law() {
        assert_eq!(solve_recurrence(6).unwrap(), vec![9, 8, 5, 0]);
        assert_eq!(solve_recurrence(2).unwrap(), vec![1, 0]);
        for n in (2..=60).step_by(2) {
            let e = solve_recurrence(n).unwrap();
            assert_eq!(*e.last().unwrap(), 0);
            let e0 = expected_crossings(n).unwrap() as i64;
            for (m, &em) in e.iter().enumerate() {
                assert_eq!(em, e0 - (m * m) as i64, "n={n}, m={m}");
            }
        }
    }

    #[test]
    fn linear_ev_matches_its_closed_form() {
        for n in (2..=200).step_by(2) {
            let m = 1000.0;
            let direct = linear_ev(m, n).unwrap();
            // exact by construction
            assert_eq!(
                direct,
                0.5 * (profit_upper(m, n).unwrap() - loss_lower(m, n).unwrap()),
                "n={n}"
            );
            // the algebraic form, up to float rounding in the formula itself
            let formula = -(m / n as f64) * (n as f64 * n as f64 / 8.0 - n as f64 / 4.0);
            assert!((direct - formula).abs() <= 1e-12 * formula.abs().max(1.0), "n={n}");
        }
    }

    #[test]
    fn odd_grid_counts_are_rejected() {
        assert!(profit_upper(100.0, 5).is_err());
        assert!(loss_lower(100.0, 3).is_err());
        assert!(required_arbitrages(7).is_err());
        assert!(expected_crossings(1).is_err());
        assert!(solve_recurrence(9).is_err());
        assert!(expected_arbitrage_value(0).is_err());
    }
}
