//! Damped-Newton solution of the six-dimensional stationarity system and
//! continuation along the overlap.
//!
//! Newton runs in transformed coordinates that keep every iterate strictly
//! inside the feasible box: nested logistic maps for `p2 <= p1 < 1`,
//! softplus gaps for `q2s <= q1s`, softplus for `c2` and `nu`. The Jacobian
//! comes from forward differences of the analytic residuals; steps are
//! clamped and backtracked on the residual norm, with a gradient-descent
//! fallback when the Jacobian is singular.
//!
//! Every converged point must also pass an independent residual re-check at
//! doubled quadrature order before it is accepted; this rejects the spurious
//! "roots" that pure fixed-order quadrature error can fabricate far from the
//! physical branch.
//!
//! Two boundary branches get explicit treatment:
//! - alpha = 0 collapses the overlaps to the `q1s = q2s = 0` face, where the
//!   surviving stationarity condition is `tanh(nu) = delta_bar` (the
//!   binary-entropy Legendre pair).
//! - When no positive-`nu` root survives, the solver pins `nu = 0`, solves
//!   the remaining five equations and tags the branch `CollapsedNu`; this is
//!   the local-entropy breakdown signal.

use crate::error::{invalid, Error, Result};
use crate::kernels::{Evaluator, LiftingParams, ModelParams};
use serde::{Deserialize, Serialize};

/// Which stationary branch a solution sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchTag {
    /// Interior solution with nu > 0 enforcing the overlap.
    PositiveNu,
    /// No nu above the floor sustains the overlap (breakdown).
    CollapsedNu,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Residual infinity-norm target.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Initial step scale for the backtracking line search, in (0, 1].
    pub damping: f64,
    pub quadrature_order: usize,
    /// Below this nu the branch is declared collapsed.
    pub nu_floor: f64,
    /// Probe the nu axis for additional stationary roots even after a
    /// successful solve, keeping the one with larger psi.
    pub nu_multistart: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-8,
            max_iterations: 100,
            damping: 1.0,
            quadrature_order: 64,
            nu_floor: 1e-4,
            nu_multistart: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(invalid("tolerance must be > 0"));
        }
        if self.max_iterations < 1 {
            return Err(invalid("max_iterations must be >= 1"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(invalid("damping must lie in (0, 1]"));
        }
        if self.nu_floor < 0.0 {
            return Err(invalid("nu_floor must be >= 0"));
        }
        Ok(())
    }
}

/// A stationary-nu candidate recorded by the multi-start probe.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NuCandidate {
    pub nu: f64,
    pub psi: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Newton steps replaced by gradient descent (singular Jacobian or stall).
    pub gradient_fallbacks: usize,
    /// Restarts taken from the structured init ladder.
    pub restarts: usize,
    /// Solution was reached by internal continuation in delta_bar.
    pub bridged: bool,
    /// Stationary candidates found by the nu probe (max-psi one is returned).
    pub nu_candidates: Vec<NuCandidate>,
    /// Solution sits on the q1s = q2s = 0 face (alpha = 0 closed form).
    pub collapsed_face: bool,
    /// Residual components that were part of the solved system; pinned or
    /// face coordinates are masked out.
    pub active: [bool; 6],
    /// Active residual norm re-evaluated at doubled quadrature order.
    pub recheck_norm: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaddleSolution {
    pub params: LiftingParams,
    pub model: ModelParams,
    /// Local entropy S_l = -psi_rd at the returned parameters.
    pub s_l: f64,
    /// Infinity norm of the active stationarity residuals.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    pub branch_tag: BranchTag,
    /// Quadrature order the solve ran at.
    pub order: usize,
    pub diagnostics: Diagnostics,
}

impl SaddleSolution {
    /// Re-evaluates the active residuals at doubled quadrature order.
    pub fn recheck_residual_norm(&self) -> Result<f64> {
        let ev = Evaluator::new(2 * self.order)?;
        let r = ev.residuals(&self.params, &self.model)?;
        Ok(masked_norm(&r, &self.diagnostics.active))
    }
}

fn masked_norm(r: &[f64; 6], active: &[bool; 6]) -> f64 {
    r.iter()
        .zip(active)
        .filter(|(_, &a)| a)
        .map(|(v, _)| v.abs())
        .fold(0.0, f64::max)
}

// ---------- box transform ----------

const P1_MAX: f64 = 1.0 - 1e-6;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

fn softplus_inv(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

fn params_from_z(z: &[f64]) -> LiftingParams {
    let p1 = P1_MAX * sigmoid(z[0]);
    let p2 = p1 * sigmoid(z[1]);
    let gap = softplus(z[2]);
    let q2s = softplus(z[3]);
    LiftingParams {
        p1,
        p2,
        q1s: q2s + gap,
        q2s,
        c2: softplus(z[4]),
        nu: if z.len() > 5 { softplus(z[5]) } else { 0.0 },
        gamma_sq: 0.0,
    }
}

fn z_from_params(lp: &LiftingParams) -> [f64; 6] {
    let clamp01 = |x: f64| x.clamp(1e-12, 1.0 - 1e-12);
    let floor = |x: f64| x.max(1e-12);
    [
        logit(clamp01(lp.p1 / P1_MAX)),
        logit(clamp01(if lp.p1 > 0.0 { lp.p2 / lp.p1 } else { 0.5 })),
        softplus_inv(floor(lp.q1s - lp.q2s)),
        softplus_inv(floor(lp.q2s)),
        softplus_inv(floor(lp.c2)),
        softplus_inv(floor(lp.nu)),
    ]
}

// ---------- dense linear solve ----------

/// Gaussian elimination with partial pivoting; None when singular.
fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if a[row][col].abs() > a[piv][col].abs() {
                piv = row;
            }
        }
        if !(a[piv][col].abs() > 1e-300) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

// ---------- Newton core ----------

struct NewtonOutcome {
    z: Vec<f64>,
    norm: f64,
    iterations: usize,
    converged: bool,
    gradient_fallbacks: usize,
}

/// Damped Newton on `f(z) = 0` with a forward-difference Jacobian.
///
/// Steps are clamped to an infinity-norm of 2 in the transformed
/// coordinates (one step cannot jump across the box) and backtracked on the
/// Euclidean residual norm; convergence is declared on the infinity norm.
/// Unless `patient`, slow-progress runs are cut short so the restart ladder
/// can take over.
fn newton<F>(f: F, z0: Vec<f64>, opts: &SolverOptions, patient: bool) -> NewtonOutcome
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    const FD_STEP: f64 = 1e-6;
    const MAX_HALVINGS: usize = 25;
    const STEP_CLAMP: f64 = 2.0;
    let n = z0.len();
    let inf_norm = |r: &[f64]| {
        let m = r.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if m.is_finite() {
            m
        } else {
            f64::INFINITY
        }
    };
    let l2_norm = |r: &[f64]| {
        let s = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if s.is_finite() {
            s
        } else {
            f64::INFINITY
        }
    };

    let mut z = z0;
    let mut fallbacks = 0usize;
    let mut r = match f(&z) {
        Some(r) => r,
        None => {
            return NewtonOutcome {
                z,
                norm: f64::INFINITY,
                iterations: 0,
                converged: false,
                gradient_fallbacks: 0,
            }
        }
    };
    let mut merit = l2_norm(&r);
    let mut stall_anchor = merit;

    for it in 0..opts.max_iterations {
        // wandering detector: far from a root, demand real progress every
        // 12 iterations or give up so the restart ladder can take over
        if !patient && it > 0 && it % 12 == 0 {
            if merit > 0.7 * stall_anchor && merit > 100.0 * opts.tolerance {
                return NewtonOutcome {
                    z,
                    norm: inf_norm(&r),
                    iterations: it,
                    converged: false,
                    gradient_fallbacks: fallbacks,
                };
            }
            stall_anchor = merit;
        }
        let norm = inf_norm(&r);
        if norm <= opts.tolerance {
            return NewtonOutcome {
                z,
                norm,
                iterations: it,
                converged: true,
                gradient_fallbacks: fallbacks,
            };
        }
        // forward-difference Jacobian, column per coordinate
        let mut jac = vec![vec![0.0; n]; n];
        let mut jac_ok = true;
        for j in 0..n {
            let mut zj = z.clone();
            zj[j] += FD_STEP;
            match f(&zj) {
                Some(rj) => {
                    for i in 0..n {
                        jac[i][j] = (rj[i] - r[i]) / FD_STEP;
                    }
                }
                None => {
                    jac_ok = false;
                    break;
                }
            }
        }
        let newton_dir = if jac_ok {
            let mut a = jac.clone();
            let mut rhs: Vec<f64> = r.iter().map(|v| -v).collect();
            solve_dense(&mut a, &mut rhs)
        } else {
            None
        };
        let gradient_dir = |jac: &[Vec<f64>], r: &[f64]| -> Option<Vec<f64>> {
            let mut g = vec![0.0; n];
            for (i, row) in jac.iter().enumerate() {
                for j in 0..n {
                    g[j] += row[j] * r[i];
                }
            }
            let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if gn > 0.0 && gn.is_finite() {
                Some(g.iter().map(|v| -v / gn).collect())
            } else {
                None
            }
        };

        let mut advanced = false;
        let mut tried_gradient = newton_dir.is_none();
        let mut dir = match newton_dir {
            Some(d) => d,
            None => {
                fallbacks += 1;
                match gradient_dir(&jac, &r) {
                    Some(d) => d,
                    None => break,
                }
            }
        };
        loop {
            // clamp the step in transformed coordinates
            let dmax = inf_norm(&dir);
            if dmax > STEP_CLAMP {
                let scale = STEP_CLAMP / dmax;
                for v in dir.iter_mut() {
                    *v *= scale;
                }
            }
            let mut s = opts.damping;
            for _ in 0..MAX_HALVINGS {
                let zt: Vec<f64> = z.iter().zip(&dir).map(|(a, d)| a + s * d).collect();
                if let Some(rt) = f(&zt) {
                    let mt = l2_norm(&rt);
                    if mt < merit {
                        z = zt;
                        r = rt;
                        merit = mt;
                        advanced = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if advanced || tried_gradient {
                break;
            }
            // Newton direction made no progress: one gradient retry
            tried_gradient = true;
            fallbacks += 1;
            match gradient_dir(&jac, &r) {
                Some(d) => dir = d,
                None => break,
            }
        }
        if !advanced {
            return NewtonOutcome {
                z,
                norm: inf_norm(&r),
                iterations: it + 1,
                converged: false,
                gradient_fallbacks: fallbacks,
            };
        }
    }
    let norm = inf_norm(&r);
    NewtonOutcome {
        z,
        norm,
        iterations: opts.max_iterations,
        converged: norm <= opts.tolerance,
        gradient_fallbacks: fallbacks,
    }
}

// ---------- solver ----------

pub struct Solver {
    eval: Evaluator,
    recheck_eval: Evaluator,
    opts: SolverOptions,
}

impl Solver {
    pub fn new(opts: SolverOptions) -> Result<Self> {
        opts.validate()?;
        Ok(Solver {
            eval: Evaluator::new(opts.quadrature_order)?,
            recheck_eval: Evaluator::new(2 * opts.quadrature_order)?,
            opts,
        })
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.eval
    }

    /// Solves the stationarity system for fixed model parameters.
    ///
    /// Non-convergence is reported through `converged = false`, not an error;
    /// errors are reserved for invalid inputs. The solve ladder is: Newton
    /// from the given init, restarts from structured variants, internal
    /// continuation from the init's home overlap, a nu-axis root probe, and
    /// finally the pinned nu = 0 system (collapsed branch).
    pub fn solve(&self, mp: &ModelParams, init: &LiftingParams) -> Result<SaddleSolution> {
        mp.validate()?;
        init.validate()?;
        if mp.alpha == 0.0 {
            return self.solve_free_limit(mp, init);
        }

        let mut restarts = 0usize;
        let mut spent = 0usize;
        let mut last_state = *init;

        // 1. direct Newton, then structured restarts
        let mut variants: Vec<LiftingParams> = vec![*init];
        for scale in [0.5, 2.0] {
            let mut v = *init;
            v.nu = (init.nu * scale).max(1e-3);
            variants.push(v);
        }
        let home = crate::default_init();
        if (home.as_array()
            .iter()
            .zip(init.as_array().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
            > 1e-9
        {
            variants.push(home);
        }
        for (k, v) in variants.iter().enumerate() {
            let out = if k == 0 {
                self.newton_full(mp, v)
            } else {
                self.newton_capped(mp, v)
            };
            spent += out.iterations;
            last_state = params_from_z(&out.z);
            if out.converged {
                if let Some(mut sol) = self.accept(mp, &out, spent, restarts, false)? {
                    if self.opts.nu_multistart {
                        self.apply_multistart(&mut sol)?;
                    }
                    return Ok(sol);
                }
            }
            restarts = k;
        }

        // 2. internal continuation from the init regime
        if let Some(mut sol) = self.bridge(mp, init, &mut spent)? {
            sol.diagnostics.restarts = restarts;
            if self.opts.nu_multistart {
                self.apply_multistart(&mut sol)?;
            }
            return Ok(sol);
        }

        // 3. full-patience attempt from the warm start before giving up on
        // the direct route (slow wandering converges near delta_bar -> 1)
        let out = self.newton_patient(mp, init);
        spent += out.iterations;
        if out.converged {
            last_state = params_from_z(&out.z);
            if let Some(mut sol) = self.accept(mp, &out, spent, restarts, false)? {
                if self.opts.nu_multistart {
                    self.apply_multistart(&mut sol)?;
                }
                return Ok(sol);
            }
        }

        // 4. probe the nu axis for a surviving root
        let (candidates, best) = self.probe_nu(mp, &last_state)?;
        if let Some(mut sol) = best {
            sol.diagnostics.nu_candidates = candidates;
            sol.diagnostics.restarts = restarts;
            sol.iterations += spent;
            return Ok(sol);
        }

        // 5. no positive-nu root: the collapsed branch
        let mut sol = self.solve_nu_pinned(mp, &last_state, 0.0)?;
        sol.diagnostics.nu_candidates = candidates;
        sol.diagnostics.restarts = restarts;
        sol.branch_tag = BranchTag::CollapsedNu;
        sol.iterations += spent;
        Ok(sol)
    }

    fn newton_full(&self, mp: &ModelParams, init: &LiftingParams) -> NewtonOutcome {
        let full = |z: &[f64]| -> Option<Vec<f64>> {
            let lp = params_from_z(z);
            self.eval.residuals(&lp, mp).ok().map(|r| r.to_vec())
        };
        newton(full, z_from_params(init).to_vec(), &self.opts, false)
    }

    /// Full-patience Newton: no stall cutoff, full iteration budget. The
    /// last resort before the solve is declared rootless.
    fn newton_patient(&self, mp: &ModelParams, init: &LiftingParams) -> NewtonOutcome {
        let full = |z: &[f64]| -> Option<Vec<f64>> {
            let lp = params_from_z(z);
            self.eval.residuals(&lp, mp).ok().map(|r| r.to_vec())
        };
        newton(full, z_from_params(init).to_vec(), &self.opts, true)
    }

    /// Newton with a reduced iteration budget for ladder attempts and bridge
    /// steps, where quick failure matters more than persistence.
    fn newton_capped(&self, mp: &ModelParams, init: &LiftingParams) -> NewtonOutcome {
        let mut opts = self.opts.clone();
        opts.max_iterations = opts.max_iterations.min(40);
        let full = |z: &[f64]| -> Option<Vec<f64>> {
            let lp = params_from_z(z);
            self.eval.residuals(&lp, mp).ok().map(|r| r.to_vec())
        };
        newton(full, z_from_params(init).to_vec(), &opts, false)
    }

    /// Converged Newton outcome -> accepted solution, or None when the
    /// doubled-order residual re-check rejects it as a quadrature artifact.
    fn accept(
        &self,
        mp: &ModelParams,
        out: &NewtonOutcome,
        iterations: usize,
        restarts: usize,
        bridged: bool,
    ) -> Result<Option<SaddleSolution>> {
        let params = params_from_z(&out.z);
        let active = [true; 6];
        let recheck = masked_norm(&self.recheck_eval.residuals(&params, mp)?, &active);
        if recheck > 10.0 * self.opts.tolerance {
            return Ok(None);
        }
        let branch = if params.nu < self.opts.nu_floor {
            BranchTag::CollapsedNu
        } else {
            BranchTag::PositiveNu
        };
        let s_l = -self.eval.psi_rd(&params, mp)?;
        Ok(Some(SaddleSolution {
            params,
            model: *mp,
            s_l,
            residual_norm: out.norm,
            converged: true,
            iterations,
            branch_tag: branch,
            order: self.opts.quadrature_order,
            diagnostics: Diagnostics {
                gradient_fallbacks: out.gradient_fallbacks,
                restarts,
                bridged,
                active,
                recheck_norm: Some(recheck),
                ..Default::default()
            },
        }))
    }

    /// Internal continuation: walk delta_bar from the solver's home regime
    /// (0.99, where the default init converges) toward the target.
    fn bridge(
        &self,
        mp: &ModelParams,
        init: &LiftingParams,
        spent: &mut usize,
    ) -> Result<Option<SaddleSolution>> {
        const HOME_DELTA: f64 = 0.99;
        let target = mp.delta_bar;
        if (target - HOME_DELTA).abs() < 1e-12 {
            return Ok(None);
        }
        let mut warm = *init;
        let mut delta = HOME_DELTA;
        let dir = (target - HOME_DELTA).signum();
        let mut step = 0.005 * dir;
        let mut mp_d = *mp;
        mp_d.delta_bar = delta;
        let out = self.newton_capped(&mp_d, &warm);
        *spent += out.iterations;
        if !out.converged {
            return Ok(None);
        }
        warm = params_from_z(&out.z);
        let mut guard = 0usize;
        while (target - delta) * dir > 1e-12 {
            guard += 1;
            if guard > 600 {
                return Ok(None);
            }
            let next = if (target - delta) * dir <= step.abs() {
                target
            } else {
                delta + step
            };
            mp_d.delta_bar = next;
            let out = self.newton_capped(&mp_d, &warm);
            *spent += out.iterations;
            if out.converged {
                delta = next;
                warm = params_from_z(&out.z);
                step = (step * 2.0).clamp(-0.005, 0.005);
                if delta == target {
                    return self.accept(&mp_d, &out, *spent, 0, true);
                }
            } else {
                step *= 0.5;
                if step.abs() < 1e-5 {
                    return Ok(None);
                }
            }
        }
        Ok(None)
    }

    /// alpha = 0: the overlaps collapse and tanh(nu) = delta_bar in closed form.
    fn solve_free_limit(&self, mp: &ModelParams, init: &LiftingParams) -> Result<SaddleSolution> {
        let params = LiftingParams {
            p1: init.p1,
            p2: init.p2,
            q1s: 0.0,
            q2s: 0.0,
            c2: init.c2,
            nu: mp.delta_bar.atanh(),
            gamma_sq: 0.0,
        };
        // q derivatives are boundary (cusp) coordinates on this face
        let active = [true, true, false, false, true, true];
        let r = self.eval.residuals(&params, mp)?;
        let norm = masked_norm(&r, &active);
        let recheck = masked_norm(&self.recheck_eval.residuals(&params, mp)?, &active);
        let s_l = -self.eval.psi_rd(&params, mp)?;
        Ok(SaddleSolution {
            params,
            model: *mp,
            s_l,
            residual_norm: norm,
            converged: norm <= self.opts.tolerance,
            iterations: 0,
            branch_tag: BranchTag::PositiveNu,
            order: self.opts.quadrature_order,
            diagnostics: Diagnostics {
                collapsed_face: true,
                active,
                recheck_norm: Some(recheck),
                ..Default::default()
            },
        })
    }

    /// Solves the five non-nu equations with nu pinned to the given value.
    fn solve_nu_pinned(
        &self,
        mp: &ModelParams,
        warm: &LiftingParams,
        nu: f64,
    ) -> Result<SaddleSolution> {
        self.solve_nu_pinned_capped(mp, warm, nu, self.opts.max_iterations)
    }

    fn solve_nu_pinned_capped(
        &self,
        mp: &ModelParams,
        warm: &LiftingParams,
        nu: f64,
        max_iterations: usize,
    ) -> Result<SaddleSolution> {
        let pinned = |z: &[f64]| -> Option<Vec<f64>> {
            let mut lp = params_from_z(z);
            lp.nu = nu;
            self.eval.residuals(&lp, mp).ok().map(|r| r[..5].to_vec())
        };
        let z0 = z_from_params(warm)[..5].to_vec();
        let mut opts = self.opts.clone();
        opts.max_iterations = max_iterations;
        let out = newton(pinned, z0, &opts, max_iterations >= self.opts.max_iterations);
        let mut params = params_from_z(&out.z);
        params.nu = nu;
        let active = [true, true, true, true, true, false];
        let recheck = masked_norm(&self.recheck_eval.residuals(&params, mp)?, &active);
        let converged = out.converged && recheck <= 10.0 * self.opts.tolerance;
        let s_l = -self.eval.psi_rd(&params, mp)?;
        Ok(SaddleSolution {
            params,
            model: *mp,
            s_l,
            residual_norm: out.norm,
            converged,
            iterations: out.iterations,
            branch_tag: BranchTag::PositiveNu,
            order: self.opts.quadrature_order,
            diagnostics: Diagnostics {
                gradient_fallbacks: out.gradient_fallbacks,
                active,
                recheck_norm: Some(recheck),
                ..Default::default()
            },
        })
    }

    /// Scans r_nu along a log-spaced nu grid (other five equations re-solved
    /// at each pin), brackets sign changes, bisects and polishes each root
    /// with the full system. Returns all candidates and the max-psi solution.
    fn probe_nu(
        &self,
        mp: &ModelParams,
        warm: &LiftingParams,
    ) -> Result<(Vec<NuCandidate>, Option<SaddleSolution>)> {
        const GRID: usize = 17;
        let lo = self.opts.nu_floor.max(1e-6);
        let hi = 5.0_f64;
        let ratio = (hi / lo).powf(1.0 / (GRID - 1) as f64);

        let r_nu_at = |nu: f64, start: &LiftingParams| -> Option<(f64, LiftingParams)> {
            let sol = self
                .solve_nu_pinned_capped(mp, start, nu, self.opts.max_iterations.min(40))
                .ok()?;
            if !sol.converged {
                return None;
            }
            let r = self.eval.residuals(&sol.params, mp).ok()?;
            Some((r[5], sol.params))
        };

        let mut scan: Vec<(f64, f64, LiftingParams)> = Vec::new();
        let mut start = *warm;
        let mut nu = lo;
        for _ in 0..GRID {
            if let Some((rn, p)) = r_nu_at(nu, &start) {
                scan.push((nu, rn, p));
                start = p;
            }
            nu *= ratio;
        }

        let mut candidates = Vec::new();
        let mut best: Option<SaddleSolution> = None;
        for w in scan.windows(2) {
            let (nu_a, r_a, p_a) = (w[0].0, w[0].1, w[0].2);
            let (nu_b, r_b) = (w[1].0, w[1].1);
            if r_a == 0.0 || r_a.signum() == r_b.signum() {
                continue;
            }
            // bisect the bracket
            let (mut a, mut b, mut ra) = (nu_a, nu_b, r_a);
            let mut start = p_a;
            for _ in 0..30 {
                let mid = 0.5 * (a + b);
                match r_nu_at(mid, &start) {
                    Some((rm, pm)) => {
                        start = pm;
                        if rm.signum() == ra.signum() {
                            a = mid;
                            ra = rm;
                        } else {
                            b = mid;
                        }
                    }
                    None => break,
                }
                if b - a < 1e-10 {
                    break;
                }
            }
            // polish with the full system
            let mut init = start;
            init.nu = 0.5 * (a + b);
            let out = self.newton_full(mp, &init);
            if out.converged {
                if let Some(sol) = self.accept(mp, &out, out.iterations, 0, false)? {
                    if sol.params.nu >= self.opts.nu_floor {
                        candidates.push(NuCandidate {
                            nu: sol.params.nu,
                            psi: -sol.s_l,
                        });
                        let better = match &best {
                            None => true,
                            Some(b) => -sol.s_l > -b.s_l,
                        };
                        if better {
                            best = Some(sol);
                        }
                    }
                }
            }
        }
        Ok((candidates, best))
    }

    /// After a successful solve, look for further positive-nu stationary
    /// candidates and keep the one with the larger psi (= smaller S_l).
    fn apply_multistart(&self, sol: &mut SaddleSolution) -> Result<()> {
        let (mut candidates, best) = self.probe_nu(&sol.model, &sol.params)?;
        candidates.push(NuCandidate {
            nu: sol.params.nu,
            psi: -sol.s_l,
        });
        if let Some(b) = best {
            // dedup against the incumbent before comparing
            if (b.params.nu - sol.params.nu).abs() > 1e-6 && -b.s_l > -sol.s_l {
                *sol = b;
            }
        }
        sol.diagnostics.nu_candidates = candidates;
        Ok(())
    }
}

impl Solver {
    /// Breakdown-region solve order: quick direct attempt, then the nu-axis
    /// probe, then the pinned nu = 0 branch. Used by continuation once a
    /// sweep has already collapsed, where the full restart ladder is wasted
    /// effort at every point.
    pub(crate) fn solve_past_breakdown(
        &self,
        mp: &ModelParams,
        warm: &LiftingParams,
    ) -> Result<SaddleSolution> {
        if mp.alpha == 0.0 {
            return self.solve_free_limit(mp, warm);
        }
        let out = self.newton_capped(mp, warm);
        let mut spent = out.iterations;
        if out.converged {
            if let Some(sol) = self.accept(mp, &out, spent, 0, false)? {
                return Ok(sol);
            }
        }
        let last_state = params_from_z(&out.z);
        let (candidates, best) = self.probe_nu(mp, &last_state)?;
        if let Some(mut sol) = best {
            sol.diagnostics.nu_candidates = candidates;
            sol.iterations += spent;
            return Ok(sol);
        }
        let mut sol = self.solve_nu_pinned(mp, warm, 0.0)?;
        spent += sol.iterations;
        sol.iterations = spent;
        sol.diagnostics.nu_candidates = candidates;
        sol.branch_tag = BranchTag::CollapsedNu;
        Ok(sol)
    }
}

/// Warm-started continuation along delta_bar.
///
/// The first point must converge (otherwise the sweep aborts); interior
/// failures are kept in the output flagged unconverged while continuation
/// proceeds from the last healthy warm start. Collapsed-nu points are
/// retained: they carry the breakdown signal.
pub fn continuation_sweep(
    mp_base: &ModelParams,
    delta_start: f64,
    delta_end: f64,
    step: f64,
    init: &LiftingParams,
    opts: &SolverOptions,
) -> Result<Vec<SaddleSolution>> {
    if step == 0.0 || !step.is_finite() {
        return Err(invalid("sweep step must be finite and nonzero"));
    }
    if (delta_end - delta_start) * step < 0.0 {
        return Err(invalid("sweep step direction must match the delta range"));
    }
    for d in [delta_start, delta_end] {
        if !(d > 0.0 && d < 1.0) {
            return Err(invalid(format!("sweep bounds must lie in (0,1), got {d}")));
        }
    }
    let solver = Solver::new(opts.clone())?;
    let n_steps = ((delta_end - delta_start) / step).round().max(0.0) as usize;
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut warm = *init;
    let mut prev_collapsed = false;
    for k in 0..=n_steps {
        let delta = delta_start + k as f64 * step;
        if !(delta > 0.0 && delta < 1.0) {
            break;
        }
        let mp = ModelParams {
            delta_bar: delta,
            ..*mp_base
        };
        let sol = if prev_collapsed {
            solver.solve_past_breakdown(&mp, &warm)?
        } else {
            solver.solve(&mp, &warm)?
        };
        if !sol.converged && out.is_empty() {
            return Err(Error::SweepAbort(format!(
                "first sweep point delta_bar={delta} did not converge \
                 (residual_norm={:.3e} after {} iterations)",
                sol.residual_norm, sol.iterations
            )));
        }
        if sol.converged && sol.branch_tag == BranchTag::PositiveNu {
            warm = sol.params;
        }
        prev_collapsed = sol.branch_tag == BranchTag::CollapsedNu;
        out.push(sol);
    }
    Ok(out)
}
