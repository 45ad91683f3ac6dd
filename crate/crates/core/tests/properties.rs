//! Property-based invariants of the kernels, solver and oracle.

use abple_core::numerics::{gauss_hermite_grid, log_erfc, log_mean_pow};
use abple_core::oracle::{
    binomial, empirical_local_entropy, enumerate_solutions, sample_instance, ReferenceMode,
};
use abple_core::{kernels, Evaluator, LiftingParams, ModelParams, Solver, SolverOptions};
use proptest::prelude::*;

fn feasible_params() -> impl Strategy<Value = LiftingParams> {
    (
        0.1_f64..0.8,   // p2
        0.05_f64..0.15, // p1 - p2 margin scale
        0.05_f64..0.5,  // q2s
        0.05_f64..0.6,  // q gap
        0.5_f64..8.0,   // c2
        0.05_f64..1.5,  // nu
    )
        .prop_map(|(p2, pg, q2s, qg, c2, nu)| {
            let p1 = (p2 + pg).min(0.995);
            LiftingParams::new(p1, p2, q2s + qg, q2s, c2, nu).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fold_identity_pointwise(
        lp in feasible_params(),
        h2 in -4.0_f64..4.0,
        h3 in -4.0_f64..4.0,
    ) {
        // f_zc equals the explicit two-branch max over the reference spin
        let a = (lp.q1s - lp.q2s).sqrt() * h2 + lp.q2s.sqrt() * h3;
        let oracle = (2.0 * (a + lp.nu).cosh()).max(2.0 * (a - lp.nu).cosh());
        let got = kernels::f_zc(lp.q1s, lp.q2s, lp.nu, h2, h3).unwrap();
        prop_assert!((got - oracle).abs() <= 1e-11 * oracle);
    }

    #[test]
    fn log_mean_pow_monotone_in_c(
        values in prop::collection::vec(-3.0_f64..3.0, 2..12),
        c_lo in 0.2_f64..3.0,
        dc in 0.2_f64..3.0,
    ) {
        // power-mean inequality: strictly increasing in c for non-constant input
        let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - values.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-3);
        let w = vec![1.0 / values.len() as f64; values.len()];
        let lo = log_mean_pow(&values, &w, c_lo).unwrap();
        let hi = log_mean_pow(&values, &w, c_lo + dc).unwrap();
        prop_assert!(hi > lo, "power mean not increasing: {lo} !< {hi}");
    }

    #[test]
    fn erfc_reflection_random(x in -6.0_f64..6.0) {
        let s = log_erfc(x).unwrap().exp() + log_erfc(-x).unwrap().exp();
        prop_assert!((s - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn oracle_counting_bound(seed in 0u64..50, d in 1u32..5) {
        // empirical LE never exceeds (1/n) log C(n, d); equality at m = 0
        let n = 10usize;
        let inst = sample_instance(n, 0.4, 0.0, seed).unwrap();
        let sols = enumerate_solutions(&inst).unwrap();
        let delta = 1.0 - 2.0 * d as f64 / n as f64;
        let le = empirical_local_entropy(&inst, &sols, delta, ReferenceMode::Exhaustive).unwrap();
        let bound = (binomial(n, d as usize) as f64).ln() / n as f64;
        prop_assert!(le.value <= bound + 1e-12);
        let free = sample_instance(n, 0.0, 0.0, seed).unwrap();
        let fsols = enumerate_solutions(&free).unwrap();
        let fle = empirical_local_entropy(&free, &fsols, delta, ReferenceMode::Exhaustive).unwrap();
        prop_assert!((fle.value - bound).abs() <= 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn gradient_consistency_random(lp in feasible_params()) {
        // residuals match central finite differences of psi_rd
        let ev = Evaluator::new(48).unwrap();
        let mp = ModelParams::new(0.77, 0.0, 0.99).unwrap();
        let r = ev.residuals(&lp, &mp).unwrap();
        let step = 1e-5;
        for i in 0..6 {
            let mut up = lp.as_array();
            let mut dn = lp.as_array();
            up[i] += step;
            dn[i] -= step;
            let f = |v: [f64; 6]| {
                ev.psi_rd(
                    &LiftingParams::new(v[0], v[1], v[2], v[3], v[4], v[5]).unwrap(),
                    &mp,
                )
                .unwrap()
            };
            let fd = (f(up) - f(dn)) / (2.0 * step);
            prop_assert!(
                (r[i] - fd).abs() <= 1e-5 * fd.abs().max(r[i].abs()) + 1e-9,
                "component {i}: analytic {} vs fd {}",
                r[i],
                fd
            );
        }
    }

    #[test]
    fn quadrature_refinement_stable(lp in feasible_params()) {
        // |psi(order 96) - psi(order 48)| small inside the feasible box
        let mp = ModelParams::new(0.77, 0.0, 0.99).unwrap();
        let lo = Evaluator::new(48).unwrap().psi_rd(&lp, &mp).unwrap();
        let hi = Evaluator::new(96).unwrap().psi_rd(&lp, &mp).unwrap();
        prop_assert!((lo - hi).abs() <= 1e-8, "psi(48)={lo} psi(96)={hi}");
    }
}

#[test]
fn quadrature_grid_convergence_kernel_values() {
    // grid-order doubling changes downstream kernel expectations below 1e-8
    let lp = LiftingParams::new(0.9814, 0.6539, 0.7924, 0.2087, 4.86, 0.2258).unwrap();
    let mp = ModelParams::new(0.77, 0.0, 0.99).unwrap();
    for k in [48usize, 64] {
        let lo = Evaluator::new(k).unwrap().psi_rd(&lp, &mp).unwrap();
        let hi = Evaluator::new(2 * k).unwrap().psi_rd(&lp, &mp).unwrap();
        assert!(
            (lo - hi).abs() <= 1e-8,
            "order {k} -> {}: psi moved {:.2e}",
            2 * k,
            (lo - hi).abs()
        );
    }
}

#[test]
fn gauss_hermite_downstream_expectations() {
    // the public grid handles the smooth expectations it is exposed for
    let g = gauss_hermite_grid(64).unwrap();
    let e_abs = g.expect(f64::abs);
    assert!((e_abs - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-13);
    let e_cosh = g.expect(|x| (2.0 * x.cosh()).ln());
    let g2 = gauss_hermite_grid(128).unwrap();
    let e_cosh2 = g2.expect(|x| (2.0 * x.cosh()).ln());
    assert!((e_cosh - e_cosh2).abs() < 1e-10);
}

#[test]
fn warm_start_stability() {
    // re-solving a converged point from its own solution leaves it unchanged
    let solver = Solver::new(SolverOptions::default()).unwrap();
    let mp = ModelParams::new(0.77, 0.0, 0.99).unwrap();
    let first = solver.solve(&mp, &abple_core::default_init()).unwrap();
    assert!(first.converged);
    let again = solver.solve(&mp, &first.params).unwrap();
    assert!(again.converged);
    for (a, b) in first
        .params
        .as_array()
        .iter()
        .zip(again.params.as_array().iter())
    {
        assert!((a - b).abs() <= 1e-10, "moved: {a} vs {b}");
    }
}

#[test]
fn converged_solution_passes_doubled_order_recheck() {
    let solver = Solver::new(SolverOptions::default()).unwrap();
    let mp = ModelParams::new(0.77, 0.0, 0.99).unwrap();
    let sol = solver.solve(&mp, &abple_core::default_init()).unwrap();
    assert!(sol.converged);
    let recheck = sol.recheck_residual_norm().unwrap();
    assert!(
        recheck <= 10.0 * solver.options().tolerance,
        "recheck norm {recheck}"
    );
    // s_l is the re-evaluated -psi_rd
    let psi = solver.evaluator().psi_rd(&sol.params, &mp).unwrap();
    assert!((sol.s_l + psi).abs() <= 1e-12);
}

#[test]
fn solution_respects_counting_bound() {
    let solver = Solver::new(SolverOptions::default()).unwrap();
    for delta in [0.97, 0.99] {
        let mp = ModelParams::new(0.77, 0.0, delta).unwrap();
        let sol = solver.solve(&mp, &abple_core::default_init()).unwrap();
        assert!(sol.converged);
        assert!(sol.s_l <= abple_core::s_max(delta).unwrap() + 1e-3);
    }
}

#[test]
fn fzd_vanishes_relative_to_fzu_in_gamma_limit() {
    // gamma_sq -> 0: the Gaussian block dies against the erfc survivor
    for (p1, p2, u2, u3) in [
        (0.5, 0.3, -1.8, -1.2),
        (0.7, 0.2, -2.5, 0.1),
        (0.3, 0.1, 0.3, -3.0),
    ] {
        let fzd = kernels::f_zd_beta(p1, p2, 0.0, 5.0, 1e-10, u2, u3).unwrap();
        let fzu = kernels::log_f_zu(p1, p2, 0.0, u2, u3).unwrap().exp();
        assert!(fzd <= 1e-6 * fzu, "p1={p1} p2={p2}: fzd={fzd:.3e} fzu={fzu:.3e}");
    }
}

#[test]
fn nu_component_with_collapsed_overlaps() {
    // nu residual reduces to delta - tanh(nu) on the collapsed face, making
    // atanh(delta) the stationary nu of the alpha = 0 problem
    let ev = Evaluator::new(48).unwrap();
    let delta = 0.9_f64;
    let mp = ModelParams::new(0.0, 0.0, delta).unwrap();
    let lp = LiftingParams::new(0.5, 0.2, 0.0, 0.0, 3.0, delta.atanh()).unwrap();
    let r = ev.residuals(&lp, &mp).unwrap();
    assert!(r[5].abs() < 1e-14);
    let psi = ev.psi_rd(&lp, &mp).unwrap();
    let d = (1.0 - delta) / 2.0;
    let entropy = -d * d.ln() - (1.0 - d) * (1.0 - d).ln();
    assert!((-psi - entropy).abs() < 1e-8);
}
