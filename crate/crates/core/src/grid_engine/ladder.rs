//! The price ladder: `n + 1` geometrically spaced levels with one current
//! (black) level; all others are gray, pending levels.

use serde::{Deserialize, Serialize};

use super::{EngineError, GridSpec};

/// Relative tolerance for level-touch detection. A price within this band of
/// a level counts as touching it, absorbing float drift between a walk's
/// accumulated price and the ladder's own power computation. Far smaller than
/// any usable grid size, so it cannot produce spurious crossings.
pub(crate) const TOUCH_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    levels: Vec<f64>,
    black: usize,
    reference: f64,
}

impl Ladder {
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn black_index(&self) -> usize {
        self.black
    }

    pub fn black_price(&self) -> f64 {
        self.levels[self.black]
    }

    pub fn reference_price(&self) -> f64 {
        self.reference
    }

    pub fn bottom(&self) -> f64 {
        self.levels[0]
    }

    pub fn top(&self) -> f64 {
        *self.levels.last().expect("ladder has levels")
    }

    /// Number of grids (one less than the number of levels).
    pub fn grid_count(&self) -> usize {
        self.levels.len() - 1
    }

    pub(crate) fn recolor(&mut self, index: usize) {
        debug_assert!(index < self.levels.len());
        self.black = index;
    }

    /// Ladder anchored to explicit bounds: `n` grids from `lower` to `upper`
    /// with the derived ratio `(upper/lower)^(1/n) - 1`, the black level
    /// being the highest level at or below `start_price`. Returns the ladder
    /// and the derived grid size.
    pub fn from_bounds(
        lower: f64,
        upper: f64,
        n: usize,
        start_price: f64,
    ) -> Result<(Self, f64), EngineError> {
        if !(lower > 0.0 && upper > lower) {
            return Err(EngineError::InvalidSpec(
                "bounds must satisfy 0 < lower < upper".into(),
            ));
        }
        if n < 2 {
            return Err(EngineError::InvalidSpec("need at least 2 grids".into()));
        }
        if !(start_price > lower && start_price < upper) {
            return Err(EngineError::InvalidSpec(
                "start price must lie strictly inside the bounds".into(),
            ));
        }
        let k = (upper / lower).powf(1.0 / n as f64) - 1.0;
        let ratio = 1.0 + k;
        let levels: Vec<f64> = (0..=n).map(|i| lower * ratio.powi(i as i32)).collect();
        check_levels(&levels)?;
        let black = levels
            .iter()
            .rposition(|&lv| lv <= start_price * (1.0 + TOUCH_EPS))
            .unwrap_or(0);
        Ok((
            Self {
                levels,
                black,
                reference: start_price,
            },
            k,
        ))
    }
}

/// Builds the ladder around a reference price: level `i` is
/// `reference * (1 + k)^(i - n_below)` for `i` in `0..=n`, the reference
/// level starting black.
pub fn build_ladder(reference: f64, spec: &GridSpec) -> Result<Ladder, EngineError> {
    spec.validate()?;
    if !(reference > 0.0 && reference.is_finite()) {
        return Err(EngineError::InvalidSpec("reference price must be positive".into()));
    }
    let ratio = 1.0 + spec.grid_size;
    let n = spec.total_grids();
    let levels: Vec<f64> = (0..=n)
        .map(|i| reference * ratio.powi(i as i32 - spec.n_below as i32))
        .collect();
    check_levels(&levels)?;
    Ok(Ladder {
        levels,
        black: spec.n_below,
        reference,
    })
}

fn check_levels(levels: &[f64]) -> Result<(), EngineError> {
    for &lv in levels {
        if !lv.is_finite() || lv < f64::MIN_POSITIVE {
            return Err(EngineError::LadderRange(format!(
                "level {lv} is not a normal positive price"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossDirection {
    Up,
    Down,
}

/// A gray level touched or passed by a price move, relative to the current
/// black level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossEvent {
    pub level_index: usize,
    pub direction: CrossDirection,
}

/// Gray levels between the black level and `price`, nearest first. A price
/// exactly on a level counts as crossing it.
pub fn crossings(ladder: &Ladder, price: f64) -> Vec<CrossEvent> {
    let mut events = Vec::new();
    let black = ladder.black;
    if price > ladder.levels[black] {
        for (i, &level) in ladder.levels.iter().enumerate().skip(black + 1) {
            if price >= level * (1.0 - TOUCH_EPS) {
                events.push(CrossEvent {
                    level_index: i,
                    direction: CrossDirection::Up,
                });
            } else {
                break;
            }
        }
    } else if price < ladder.levels[black] {
        for i in (0..black).rev() {
            if price <= ladder.levels[i] * (1.0 + TOUCH_EPS) {
                events.push(CrossEvent {
                    level_index: i,
                    direction: CrossDirection::Down,
                });
            } else {
                break;
            }
        }
    }
    events
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(k: f64, above: usize, below: usize) -> GridSpec {
        GridSpec::new(k, above, below, 0.0, 1000.0).unwrap()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn ladder_matches_the_geometric_table() {
        let ladder = build_ladder(100.0, &spec(0.1, 2, 1)).unwrap();
        let expected = [100.0 / 1.1, 100.0, 110.0, 121.0];
        assert_eq!(ladder.levels().len(), 4);
        for (got, want) in ladder.levels().iter().zip(expected) {
            assert!(rel_err(*got, want) < 1e-12, "{got} vs {want}");
        }
        assert_eq!(ladder.black_index(), 1);
        assert_eq!(ladder.black_price(), 100.0);
    }

    #[test]
    fn minimal_grid_has_three_levels() {
        let ladder = build_ladder(100.0, &spec(0.1, 1, 1)).unwrap();
        assert_eq!(ladder.levels().len(), 3);
        assert!(rel_err(ladder.bottom(), 100.0 / 1.1) < 1e-12);
        assert!(rel_err(ladder.top(), 110.0) < 1e-12);
    }

    #[test]
    fn adjacent_level_ratio_is_the_grid_size() {
        let ladder = build_ladder(250.0, &spec(0.1, 8, 5)).unwrap();
        for pair in ladder.levels().windows(2) {
            assert!(rel_err(pair[1] / pair[0], 1.1) < 1e-12);
        }
    }

    #[test]
    fn extreme_exponent_is_a_range_error() {
        let err = build_ladder(100.0, &spec(0.9, 2000, 2000));
        assert!(matches!(err, Err(EngineError::LadderRange(_))));
    }

    #[test]
    fn single_level_between_prices_crosses_once() {
        let ladder = build_ladder(100.0, &spec(0.1, 2, 1)).unwrap();
        let events = crossings(&ladder, 115.0);
        assert_eq!(
            events,
            vec![CrossEvent {
                level_index: 2,
                direction: CrossDirection::Up
            }]
        );
    }

    #[test]
    fn two_levels_cross_in_order() {
        let ladder = build_ladder(100.0, &spec(0.1, 2, 1)).unwrap();
        let events = crossings(&ladder, 122.0);
        assert_eq!(events.len(), 2);
        assert_eq!(events[0].level_index, 2);
        assert_eq!(events[1].level_index, 3);
    }

    #[test]
    fn small_move_crosses_nothing() {
        let ladder = build_ladder(100.0, &spec(0.1, 2, 1)).unwrap();
        assert!(crossings(&ladder, 100.5).is_empty());
        assert!(crossings(&ladder, 100.0).is_empty());
    }

    #[test]
    fn exact_touch_counts_as_a_cross() {
        let ladder = build_ladder(100.0, &spec(0.1, 2, 1)).unwrap();
        let top_level = ladder.levels()[2];
        let events = crossings(&ladder, top_level);
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].level_index, 2);
    }

    #[test]
    fn downward_crosses_walk_toward_the_bottom() {
        let ladder = build_ladder(100.0, &spec(0.1, 1, 3)).unwrap();
        // levels: 100/1.331, 100/1.21, 100/1.1, 100, 110 with black = 3
        let events = crossings(&ladder, 100.0 / 1.22);
        assert_eq!(events.len(), 2);
        assert_eq!(events[0].level_index, 2);
        assert_eq!(events[0].direction, CrossDirection::Down);
        assert_eq!(events[1].level_index, 1);
    }

    #[test]
    fn bounds_ladder_derives_the_ratio() {
        let (ladder, k) = Ladder::from_bounds(10_000.0, 80_000.0, 20, 29_000.0).unwrap();
        assert!(rel_err(k, 8f64.powf(0.05) - 1.0) < 1e-12);
        assert_eq!(ladder.levels().len(), 21);
        assert!(rel_err(ladder.bottom(), 10_000.0) < 1e-12);
        assert!(rel_err(ladder.top(), 80_000.0) < 1e-9);
        let b = ladder.black_index();
        assert!(ladder.levels()[b] <= 29_000.0 && 29_000.0 < ladder.levels()[b + 1]);
    }
}
