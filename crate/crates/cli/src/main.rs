//! `abple`: local entropy of the asymmetric binary perceptron.
//!
//! Subcommands: `solve` (one stationary point), `sweep` (entropy curve over
//! the overlap with breakdown detection), `oracle` (small-instance
//! brute-force cross-check), `smax` (the counting bound).
//!
//! Exit status: 0 success, 1 numerical failure, 2 usage error.

mod config;
mod emit;

use abple_core::oracle;
use abple_core::sweep::{build_curve, s_max, SweepOptions};
use abple_core::{default_init, LiftingParams, ModelParams, Solver, SolverOptions};
use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{require, resolve, ConfigFile};
use emit::Provenance;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "abple", version, about = "ABP local entropy on the second level of lifting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Flat key=value config file; explicit flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path (stdout when absent)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
}

#[derive(Args, Clone)]
struct SolverFlags {
    /// Quadrature resolution (ABPLE_QUAD_ORDER overrides the default)
    #[arg(long)]
    quad_order: Option<usize>,
    /// Residual infinity-norm target
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// nu below this is a collapsed (breakdown) branch
    #[arg(long)]
    nu_floor: Option<f64>,
    /// Probe for additional stationary nu roots and keep the max-psi one
    #[arg(long)]
    multistart: bool,
    /// Warm start as p1,p2,q1s,q2s,c2,nu
    #[arg(long, value_name = "P1,P2,Q1S,Q2S,C2,NU")]
    init: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the stationarity system at one (alpha, kappa, delta_bar)
    Solve {
        #[arg(long, allow_negative_numbers = true)]
        alpha: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        kappa: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        delta: Option<f64>,
        #[command(flatten)]
        solver: SolverFlags,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Sweep the local-entropy curve over delta_bar
    Sweep {
        #[arg(long, allow_negative_numbers = true)]
        alpha: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        kappa: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        delta_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        delta_max: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        step: Option<f64>,
        /// Bisect the breakdown overlap down to 1e-4
        #[arg(long)]
        refine: bool,
        #[command(flatten)]
        solver: SolverFlags,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Brute-force empirical local entropy on sampled small instances
    Oracle {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        alpha: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        kappa: Option<f64>,
        /// Comma-separated overlaps, each with integer n(1-delta)/2
        #[arg(long)]
        deltas: Option<String>,
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// The counting bound S_max(delta_bar)
    Smax {
        #[arg(long, allow_negative_numbers = true)]
        delta: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        delta_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        delta_max: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        step: Option<f64>,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            // argument/validation problems are usage errors
            let msg = format!("{e:#}");
            if msg.contains("invalid argument") || msg.contains("missing required") {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn load_config(common: &CommonOpts) -> Result<ConfigFile> {
    match &common.config {
        Some(path) => ConfigFile::load(path),
        None => Ok(ConfigFile::default()),
    }
}

fn quad_order_env() -> Result<Option<usize>> {
    match std::env::var("ABPLE_QUAD_ORDER") {
        Ok(raw) => match raw.parse::<usize>() {
            Ok(v) => Ok(Some(v)),
            Err(_) => bail!("invalid argument: ABPLE_QUAD_ORDER=`{raw}` is not a valid order"),
        },
        Err(_) => Ok(None),
    }
}

fn solver_options(flags: &SolverFlags, cfg: &ConfigFile) -> Result<SolverOptions> {
    let defaults = SolverOptions::default();
    let quad_default = match quad_order_env()? {
        Some(v) => v,
        None => defaults.quadrature_order,
    };
    let opts = SolverOptions {
        tolerance: resolve(flags.tol, cfg, "tol", defaults.tolerance)?,
        max_iterations: resolve(flags.max_iter, cfg, "max-iter", defaults.max_iterations)?,
        damping: defaults.damping,
        quadrature_order: resolve(flags.quad_order, cfg, "quad-order", quad_default)?,
        nu_floor: resolve(flags.nu_floor, cfg, "nu-floor", defaults.nu_floor)?,
        nu_multistart: flags.multistart || cfg.get("multistart")?.unwrap_or(false),
    };
    if let Err(e) = opts.validate() {
        bail!("{e}");
    }
    Ok(opts)
}

fn parse_init(flags: &SolverFlags, cfg: &ConfigFile) -> Result<LiftingParams> {
    let raw = match (&flags.init, cfg.get::<String>("init")?) {
        (Some(v), _) => Some(v.clone()),
        (None, v) => v,
    };
    let Some(raw) = raw else {
        return Ok(default_init());
    };
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        bail!("invalid argument: --init needs 6 comma-separated values, got {}", parts.len());
    }
    let mut v = [0.0; 6];
    for (i, part) in parts.iter().enumerate() {
        v[i] = part
            .parse::<f64>()
            .map_err(|_| anyhow::anyhow!("invalid argument: --init component `{part}`"))?;
    }
    LiftingParams::new(v[0], v[1], v[2], v[3], v[4], v[5]).map_err(|e| anyhow::anyhow!("{e}"))
}

fn model(alpha: f64, kappa: f64, delta: f64, flag: &str) -> Result<ModelParams> {
    ModelParams::new(alpha, kappa, delta)
        .map_err(|e| anyhow::anyhow!("invalid argument: --{flag}: {e}"))
}

fn parse_deltas(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| anyhow::anyhow!("invalid argument: --deltas component `{s}`"))
        })
        .collect()
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve {
            alpha,
            kappa,
            delta,
            solver,
            common,
        } => {
            let cfg = load_config(&common)?;
            let alpha = require(alpha, &cfg, "alpha")?;
            let kappa = resolve(kappa, &cfg, "kappa", 0.0)?;
            let delta = require(delta, &cfg, "delta")?;
            if alpha < 0.0 {
                bail!("invalid argument: --alpha must be >= 0, got {alpha}");
            }
            let mp = model(alpha, kappa, delta, "delta")?;
            let opts = solver_options(&solver, &cfg)?;
            let init = parse_init(&solver, &cfg)?;
            let prov = Provenance {
                command: "solve".into(),
                quad_order: opts.quadrature_order,
                tolerance: opts.tolerance,
                nu_floor: opts.nu_floor,
                seed: None,
            };
            let sol = Solver::new(opts)?.solve(&mp, &init)?;
            let content = match common.format.unwrap_or(Format::Text) {
                Format::Text => emit::solution_text(&sol),
                Format::Csv => emit::solution_csv(&sol, &prov),
                Format::Json => emit::solution_json(&sol, &prov)?,
            };
            emit::write_output(common.out.as_deref(), &content)?;
            if sol.converged {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!(
                    "solve did not converge (residual_norm={:.3e})",
                    sol.residual_norm
                );
                Ok(ExitCode::from(1))
            }
        }
        Command::Sweep {
            alpha,
            kappa,
            delta_min,
            delta_max,
            step,
            refine,
            solver,
            common,
        } => {
            let cfg = load_config(&common)?;
            let alpha = require(alpha, &cfg, "alpha")?;
            let kappa = resolve(kappa, &cfg, "kappa", 0.0)?;
            let delta_min = require(delta_min, &cfg, "delta-min")?;
            let delta_max = require(delta_max, &cfg, "delta-max")?;
            let step = resolve(step, &cfg, "step", 0.002)?;
            if alpha < 0.0 {
                bail!("invalid argument: --alpha must be >= 0, got {alpha}");
            }
            let mp = model(alpha, kappa, delta_min, "delta-min")?;
            let opts = SweepOptions {
                solver: solver_options(&solver, &cfg)?,
                refine_breakdown: refine || cfg.get("refine")?.unwrap_or(false),
            };
            let init = parse_init(&solver, &cfg)?;
            let prov = Provenance {
                command: format!("sweep alpha={alpha} kappa={kappa}"),
                quad_order: opts.solver.quadrature_order,
                tolerance: opts.solver.tolerance,
                nu_floor: opts.solver.nu_floor,
                seed: None,
            };
            let curve = build_curve(&mp, delta_min, delta_max, step, &init, &opts)?;
            let content = match common.format.unwrap_or(Format::Csv) {
                Format::Json => emit::curve_json(&curve, &prov)?,
                _ => emit::curve_csv(&curve, &prov),
            };
            emit::write_output(common.out.as_deref(), &content)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle {
            n,
            alpha,
            kappa,
            deltas,
            instances,
            seed,
            common,
        } => {
            let cfg = load_config(&common)?;
            let n = require(n, &cfg, "n")?;
            let alpha = require(alpha, &cfg, "alpha")?;
            let kappa = resolve(kappa, &cfg, "kappa", 0.0)?;
            let instances = resolve(instances, &cfg, "instances", 8)?;
            let seed = resolve(seed, &cfg, "seed", 0)?;
            let deltas_raw = match (deltas, cfg.get::<String>("deltas")?) {
                (Some(v), _) => v,
                (None, Some(v)) => v,
                (None, None) => bail!("missing required value for --deltas"),
            };
            let deltas = parse_deltas(&deltas_raw)?;
            let prov = Provenance {
                command: format!("oracle n={n} alpha={alpha} kappa={kappa} instances={instances}"),
                quad_order: 0,
                tolerance: 0.0,
                nu_floor: 0.0,
                seed: Some(seed),
            };
            let stats = oracle::empirical_curve(n, alpha, kappa, &deltas, instances, seed)?;
            let content = match common.format.unwrap_or(Format::Csv) {
                Format::Json => emit::oracle_json(&stats, &prov)?,
                _ => emit::oracle_csv(&stats, &prov),
            };
            emit::write_output(common.out.as_deref(), &content)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Smax {
            delta,
            delta_min,
            delta_max,
            step,
            common,
        } => {
            let cfg = load_config(&common)?;
            let points: Vec<(f64, f64)> = match delta.or(cfg.get("delta")?) {
                Some(d) => vec![(d, s_max(d)?)],
                None => {
                    let lo = require(delta_min, &cfg, "delta-min")?;
                    let hi = require(delta_max, &cfg, "delta-max")?;
                    let step: f64 = resolve(step, &cfg, "step", 0.002)?;
                    if step <= 0.0 {
                        bail!("invalid argument: --step must be > 0, got {step}");
                    }
                    let n = ((hi - lo) / step).round().max(0.0) as usize;
                    (0..=n)
                        .map(|k| {
                            let d = lo + k as f64 * step;
                            s_max(d).map(|s| (d, s))
                        })
                        .collect::<abple_core::Result<_>>()?
                }
            };
            let prov = Provenance {
                command: "smax".into(),
                quad_order: 0,
                tolerance: 0.0,
                nu_floor: 0.0,
                seed: None,
            };
            let content = match common.format.unwrap_or(Format::Csv) {
                Format::Json => emit::smax_json(&points, &prov)?,
                _ => emit::smax_csv(&points, &prov),
            };
            emit::write_output(common.out.as_deref(), &content)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
