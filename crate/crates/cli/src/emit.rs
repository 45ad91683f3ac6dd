//! Bit-stable data emission: CSV with a pinned header and 17-significant-digit
//! numerics (round-trip exact for f64), or JSON.

use abple_core::oracle::CurveStat;
use abple_core::{Curve, SaddleSolution};
use anyhow::{Context, Result};
use std::io::Write;
use std::path::Path;

pub const CURVE_HEADER: &str =
    "delta_bar,s_l,s_max,nu,p1,p2,q1s,q2s,c2,residual_norm,converged,breakdown";

/// 17 significant digits: enough to reconstruct the exact f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Provenance {
    pub command: String,
    pub quad_order: usize,
    pub tolerance: f64,
    pub nu_floor: f64,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn comment_line(&self) -> String {
        let seed = match self.seed {
            Some(s) => format!(" seed={s}"),
            None => String::new(),
        };
        format!(
            "# abple {} quad_order={} tolerance={:e} nu_floor={:e}{}",
            self.command, self.quad_order, self.tolerance, self.nu_floor, seed
        )
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::json!({
            "command": self.command,
            "quad_order": self.quad_order,
            "tolerance": self.tolerance,
            "nu_floor": self.nu_floor,
            "seed": self.seed,
        })
    }
}

pub fn curve_csv(curve: &Curve, prov: &Provenance) -> String {
    let mut out = String::new();
    out.push_str(&prov.comment_line());
    out.push('\n');
    match curve.breakdown_delta {
        Some(bd) => out.push_str(&format!("# breakdown_delta = {}\n", fmt_f64(bd))),
        None => out.push_str("# breakdown_delta = none\n"),
    }
    if let Some(re) = curve.reemergence {
        out.push_str(&format!(
            "# reemergence_delta = {} reliable = {}\n",
            fmt_f64(re.delta_bar),
            re.reliable
        ));
    }
    out.push_str(CURVE_HEADER);
    out.push('\n');
    for p in &curve.points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_f64(p.delta_bar),
            fmt_f64(p.s_l),
            fmt_f64(p.s_max),
            fmt_f64(p.nu),
            fmt_f64(p.p1),
            fmt_f64(p.p2),
            fmt_f64(p.q1s),
            fmt_f64(p.q2s),
            fmt_f64(p.c2),
            fmt_f64(p.residual_norm),
            p.converged,
            p.breakdown
        ));
    }
    out
}

pub fn curve_json(curve: &Curve, prov: &Provenance) -> Result<String> {
    let mut value = serde_json::to_value(curve)?;
    value["provenance"] = prov.json();
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

/// Table-1 column order: alpha, delta, gamma_sq, nu, p2, p1, q2s, q1s, c2, S_l.
pub fn solution_text(sol: &SaddleSolution) -> String {
    let p = &sol.params;
    let mut out = String::new();
    out.push_str("alpha delta_bar gamma_sq nu p2 p1 q2s q1s c2 s_l\n");
    out.push_str(&format!(
        "{} {} {} {} {} {} {} {} {} {}\n",
        fmt_f64(sol.model.alpha),
        fmt_f64(sol.model.delta_bar),
        fmt_f64(p.gamma_sq),
        fmt_f64(p.nu),
        fmt_f64(p.p2),
        fmt_f64(p.p1),
        fmt_f64(p.q2s),
        fmt_f64(p.q1s),
        fmt_f64(p.c2),
        fmt_f64(sol.s_l),
    ));
    out.push_str(&format!(
        "converged={} branch={:?} residual_norm={} iterations={}\n",
        sol.converged,
        sol.branch_tag,
        fmt_f64(sol.residual_norm),
        sol.iterations
    ));
    out
}

pub fn solution_csv(sol: &SaddleSolution, prov: &Provenance) -> String {
    let p = &sol.params;
    let mut out = String::new();
    out.push_str(&prov.comment_line());
    out.push('\n');
    out.push_str("alpha,delta_bar,gamma_sq,nu,p2,p1,q2s,q1s,c2,s_l,residual_norm,converged\n");
    out.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}\n",
        fmt_f64(sol.model.alpha),
        fmt_f64(sol.model.delta_bar),
        fmt_f64(p.gamma_sq),
        fmt_f64(p.nu),
        fmt_f64(p.p2),
        fmt_f64(p.p1),
        fmt_f64(p.q2s),
        fmt_f64(p.q1s),
        fmt_f64(p.c2),
        fmt_f64(sol.s_l),
        fmt_f64(sol.residual_norm),
        sol.converged
    ));
    out
}

pub fn solution_json(sol: &SaddleSolution, prov: &Provenance) -> Result<String> {
    let mut value = serde_json::to_value(sol)?;
    value["provenance"] = prov.json();
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

pub fn oracle_csv(stats: &[CurveStat], prov: &Provenance) -> String {
    let mut out = String::new();
    out.push_str(&prov.comment_line());
    out.push('\n');
    out.push_str("delta_bar,mean,std_error\n");
    for s in stats {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(s.delta_bar),
            fmt_f64(s.mean),
            fmt_f64(s.std_error)
        ));
    }
    out
}

pub fn oracle_json(stats: &[CurveStat], prov: &Provenance) -> Result<String> {
    let value = serde_json::json!({
        "provenance": prov.json(),
        "points": stats,
    });
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

pub fn smax_csv(points: &[(f64, f64)], prov: &Provenance) -> String {
    let mut out = String::new();
    out.push_str(&prov.comment_line());
    out.push('\n');
    out.push_str("delta_bar,s_max\n");
    for (d, s) in points {
        out.push_str(&format!("{},{}\n", fmt_f64(*d), fmt_f64(*s)));
    }
    out
}

pub fn smax_json(points: &[(f64, f64)], prov: &Provenance) -> Result<String> {
    let rows: Vec<serde_json::Value> = points
        .iter()
        .map(|(d, s)| serde_json::json!({"delta_bar": d, "s_max": s}))
        .collect();
    let value = serde_json::json!({
        "provenance": prov.json(),
        "points": rows,
    });
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

/// Writes to the path or stdout when absent.
pub fn write_output(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        None => {
            print!("{content}");
            std::io::stdout().flush()?;
            Ok(())
        }
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("cannot write output file {}", path.display())),
    }
}
