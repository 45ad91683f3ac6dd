//! Worst-case local entropy of the asymmetric binary perceptron on the
//! second level of the lifted-duality hierarchy.
//!
//! The crate solves the six-equation stationarity system of the dual
//! free-energy functional, sweeps local-entropy curves S_l(delta_bar) along
//! the overlap, locates the entropy-breakdown overlap, and cross-checks the
//! definitions against a small-instance brute-force oracle.
//!
//! Module map:
//! - [`numerics`]: quadrature grids, `log_erfc`, log-domain power means.
//! - [`kernels`]: the functional `psi_rd`, its kernels and the six analytic
//!   stationarity derivatives.
//! - [`saddle`]: damped-Newton solver and warm-started continuation.
//! - [`sweep`]: curve assembly, the `S_max` bound, breakdown detection.
//! - [`oracle`]: exact enumeration oracle on small Gaussian instances.

pub mod error;
pub mod kernels;
pub mod numerics;
pub mod oracle;
pub mod saddle;
pub mod sweep;

pub use error::{Error, Result};
pub use kernels::{Evaluator, LiftingParams, ModelParams};
pub use saddle::{BranchTag, SaddleSolution, Solver, SolverOptions};
pub use sweep::{build_curve, detect_breakdown, s_max, Curve, CurvePoint, SweepOptions};

/// Default starting point for the saddle solver, tuned to the
/// (alpha ~ 0.77, delta_bar ~ 0.99) regime; continuation handles the rest.
pub fn default_init() -> LiftingParams {
    LiftingParams {
        p1: 0.98,
        p2: 0.65,
        q1s: 0.8,
        q2s: 0.2,
        c2: 4.5,
        nu: 0.2,
        gamma_sq: 0.0,
    }
}
