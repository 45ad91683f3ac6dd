//! Local-entropy curves, the S_max counting bound and breakdown location.

use crate::error::{invalid, Result};
use crate::kernels::{LiftingParams, ModelParams};
use crate::saddle::{continuation_sweep, BranchTag, SaddleSolution, Solver, SolverOptions};
use serde::{Deserialize, Serialize};

/// Overlap-constrained counting bound: natural-log binary entropy of the
/// Hamming fraction d = (1 - delta_bar)/2. No cluster can hold more than
/// C(n, dn) points, so S_l <= s_max always.
pub fn s_max(delta_bar: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta_bar) {
        return Err(invalid(format!(
            "s_max: delta_bar must lie in [0,1], got {delta_bar}"
        )));
    }
    let d = (1.0 - delta_bar) / 2.0;
    if d == 0.0 || d == 1.0 {
        return Ok(0.0);
    }
    Ok(-d * d.ln() - (1.0 - d) * (1.0 - d).ln())
}

/// One sweep point with everything the curve plots carry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePoint {
    pub delta_bar: f64,
    pub s_l: f64,
    pub s_max: f64,
    pub nu: f64,
    pub p1: f64,
    pub p2: f64,
    pub q1s: f64,
    pub q2s: f64,
    pub c2: f64,
    pub residual_norm: f64,
    pub converged: bool,
    /// collapsed-nu branch or non-positive local entropy.
    pub breakdown: bool,
}

impl CurvePoint {
    fn from_solution(sol: &SaddleSolution) -> Result<Self> {
        let p = &sol.params;
        Ok(CurvePoint {
            delta_bar: sol.model.delta_bar,
            s_l: sol.s_l,
            s_max: s_max(sol.model.delta_bar)?,
            nu: p.nu,
            p1: p.p1,
            p2: p.p2,
            q1s: p.q1s,
            q2s: p.q2s,
            c2: p.c2,
            residual_norm: sol.residual_norm,
            converged: sol.converged,
            breakdown: sol.branch_tag == BranchTag::CollapsedNu || sol.s_l <= 0.0,
        })
    }
}

/// Probed re-emergence of positive entropy past the breakdown window.
/// Numerically fragile near delta_bar ~ 1; `reliable` is false whenever p1
/// saturated against its box limit at any contributing point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Reemergence {
    pub delta_bar: f64,
    pub reliable: bool,
}

/// A local-entropy curve over delta_bar at fixed (alpha, kappa).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Curve {
    /// delta_bar of the model is ignored; each point carries its own.
    pub model: ModelParams,
    pub points: Vec<CurvePoint>,
    /// First overlap where the local entropy breaks down, if any.
    pub breakdown_delta: Option<f64>,
    pub reemergence: Option<Reemergence>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SweepOptions {
    pub solver: SolverOptions,
    /// Bisect between the last healthy and first broken point down to 1e-4.
    pub refine_breakdown: bool,
}

/// Smallest delta_bar whose point has nu below the floor or non-positive
/// local entropy; None when the curve stays healthy. Points that simply
/// failed to converge carry no branch information and are skipped (they are
/// flagged through `converged` instead).
pub fn detect_breakdown(curve: &Curve, nu_floor: f64) -> Option<f64> {
    curve
        .points
        .iter()
        .find(|p| p.converged && (p.nu < nu_floor || p.s_l <= 0.0))
        .map(|p| p.delta_bar)
}

/// Builds a curve by warm-started continuation and annotates breakdown.
pub fn build_curve(
    mp: &ModelParams,
    delta_start: f64,
    delta_end: f64,
    step: f64,
    init: &LiftingParams,
    opts: &SweepOptions,
) -> Result<Curve> {
    let sols = continuation_sweep(mp, delta_start, delta_end, step, init, &opts.solver)?;
    let points: Vec<CurvePoint> = sols
        .iter()
        .map(CurvePoint::from_solution)
        .collect::<Result<_>>()?;
    let mut curve = Curve {
        model: *mp,
        points,
        breakdown_delta: None,
        reemergence: None,
    };
    curve.breakdown_delta = detect_breakdown(&curve, opts.solver.nu_floor);

    if let Some(bd) = curve.breakdown_delta {
        if opts.refine_breakdown {
            curve.breakdown_delta = Some(refine_breakdown(&sols, bd, &opts.solver)?);
        }
        // probe re-emergence: first post-breakdown point that is healthy again
        let after: Vec<&CurvePoint> = curve
            .points
            .iter()
            .filter(|p| p.delta_bar > bd)
            .collect();
        if let Some(re) = after
            .iter()
            .find(|p| p.converged && p.nu >= opts.solver.nu_floor && p.s_l > 0.0)
        {
            let saturated = after
                .iter()
                .take_while(|p| p.delta_bar <= re.delta_bar)
                .any(|p| p.p1 >= 1.0 - 2e-6);
            curve.reemergence = Some(Reemergence {
                delta_bar: re.delta_bar,
                reliable: !saturated,
            });
        }
    }
    Ok(curve)
}

/// Narrows the breakdown overlap to 1e-4 by bisecting between the last
/// healthy sweep point and the first broken one.
fn refine_breakdown(
    sols: &[SaddleSolution],
    first_broken: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    let idx = sols
        .iter()
        .position(|s| s.model.delta_bar == first_broken)
        .unwrap_or(0);
    if idx == 0 {
        return Ok(first_broken);
    }
    let healthy = &sols[idx - 1];
    let solver = Solver::new(opts.clone())?;
    let mut lo = healthy.model.delta_bar;
    let mut hi = first_broken;
    let mut warm = healthy.params;
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        let mp = ModelParams {
            delta_bar: mid,
            ..healthy.model
        };
        let sol = solver.solve(&mp, &warm)?;
        let broken =
            !sol.converged || sol.branch_tag == BranchTag::CollapsedNu || sol.s_l <= 0.0;
        if broken {
            hi = mid;
        } else {
            lo = mid;
            warm = sol.params;
        }
    }
    Ok(hi)
}
