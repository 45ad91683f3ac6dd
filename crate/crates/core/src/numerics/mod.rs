//! Quadrature grids, stable special functions and log-domain expectation
//! utilities.
//!
//! Everything here is pure and deterministic: grids are immutable after
//! construction and reductions run in a fixed order (pairwise summation), so
//! repeated evaluations are bit-identical.

mod gauss;
mod panel;
mod special;

pub use gauss::{gauss_hermite_grid, QuadratureGrid};
pub(crate) use panel::{GaussianRule, LegendreRule};
pub use special::{log_2cosh, log_erfc, log_mean_pow};

/// Pairwise (cascade) summation in a fixed order.
///
/// O(log n) error growth instead of O(n) for sequential accumulation, and the
/// reduction tree depends only on the slice length, which keeps results
/// bit-stable across runs.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BASE: usize = 32;
    if values.len() <= BASE {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// log(sum exp(z_i)) with the usual max shift; -inf for an empty slice.
pub(crate) fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let shifted: Vec<f64> = z.iter().map(|&v| (v - m).exp()).collect();
    m + pairwise_sum(&shifted).ln()
}
