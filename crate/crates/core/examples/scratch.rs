use abple_core::sweep::{build_curve, SweepOptions};
use abple_core::*;
use std::time::Instant;

fn main() {
    let opts = SweepOptions::default();
    for alpha in [0.78, 0.77] {
        let mp = ModelParams::new(alpha, 0.0, 0.99).unwrap();
        let t = Instant::now();
        let curve = build_curve(&mp, 0.90, 0.999, 0.002, &default_init(), &opts).unwrap();
        println!(
            "alpha={alpha}: {} points in {:.1?}, breakdown_delta={:?}, reemergence={:?}",
            curve.points.len(),
            t.elapsed(),
            curve.breakdown_delta,
            curve.reemergence,
        );
        for p in &curve.points {
            if p.delta_bar > 0.9859 {
                println!(
                    "  d={:.4} S_l={:+.7} nu={:.6} p1={:.6} c2={:.4} conv={} bd={}",
                    p.delta_bar, p.s_l, p.nu, p.p1, p.c2, p.converged, p.breakdown
                );
            }
        }
    }
}
