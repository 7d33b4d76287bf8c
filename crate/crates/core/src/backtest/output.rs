//! Flat-table serialization of sweep results.

use super::SweepGrid;

pub(crate) const SWEEP_CSV_HEADER: &str = "k,half,irr,mdd,trades,resets,final_equity";

/// Renders a sweep as the flat CSV table `k,half,irr,mdd,trades,resets,
/// final_equity`, one row per cell in cell order. Floats use Rust's shortest
/// round-trip formatting, so output is byte-deterministic.
pub fn sweep_to_csv(grid: &SweepGrid) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for cell in &grid.cells {
        let r = &cell.report;
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            cell.grid_size, cell.half, r.irr, r.mdd, r.trade_count, r.reset_count, r.final_equity
        ));
    }
    out
}
