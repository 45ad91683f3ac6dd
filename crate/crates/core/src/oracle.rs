//! Brute-force empirical local entropy on small instances.
//!
//! Directly realizes the defining quantity: sample a Gaussian constraint
//! matrix, enumerate every cube vertex satisfying `G x >= kappa 1`, then for
//! the best reference vertex count solutions at exact Hamming distance
//! `d = n (1 - delta_bar) / 2`. This is the semantic cross-check for the
//! analytic pipeline; finite-size effects preclude numeric agreement with
//! the n -> infinity values, so it validates definitions and trends.

use crate::error::{invalid, Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Hard ceiling for full vertex enumeration.
const ENUM_BUDGET_BITS: usize = 26;
/// Hard ceiling for the exhaustive reference scan (2^n references).
const EXHAUSTIVE_REF_BITS: usize = 20;

/// A sampled Gaussian constraint matrix. Vertices live on the scaled cube
/// (entries +-1/sqrt(n)); the constraint `G x >= kappa 1` is evaluated as
/// `G s >= kappa sqrt(n)` on sign vectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McInstance {
    pub n: usize,
    pub m: usize,
    pub kappa: f64,
    /// m x n entries, row-major.
    g: Vec<f64>,
    pub seed: u64,
}

impl McInstance {
    pub fn matrix(&self) -> &[f64] {
        &self.g
    }

    /// Builds an instance from an explicit matrix (rows of length n).
    pub fn from_matrix(n: usize, kappa: f64, g: Vec<f64>, seed: u64) -> Result<Self> {
        if n == 0 || n > 30 {
            return Err(invalid(format!("n must lie in [1,30], got {n}")));
        }
        if g.len() % n != 0 {
            return Err(invalid("matrix length must be a multiple of n"));
        }
        Ok(McInstance {
            n,
            m: g.len() / n,
            kappa,
            g,
            seed,
        })
    }

    /// The same instance with one constraint row removed.
    pub fn without_row(&self, row: usize) -> Result<Self> {
        if row >= self.m {
            return Err(invalid(format!("row {row} out of range (m={})", self.m)));
        }
        let mut g = self.g.clone();
        g.drain(row * self.n..(row + 1) * self.n);
        Ok(McInstance {
            n: self.n,
            m: self.m - 1,
            kappa: self.kappa,
            g,
            seed: self.seed,
        })
    }
}

/// Deterministically samples `round(alpha n)` standard-normal constraint rows.
pub fn sample_instance(n: usize, alpha: f64, kappa: f64, seed: u64) -> Result<McInstance> {
    if n == 0 || n > 30 {
        return Err(invalid(format!("n must lie in [1,30], got {n}")));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(invalid(format!("alpha must be >= 0, got {alpha}")));
    }
    if !kappa.is_finite() {
        return Err(invalid("kappa must be finite"));
    }
    let m = (alpha * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: Vec<f64> = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
    Ok(McInstance {
        n,
        m,
        kappa,
        g,
        seed,
    })
}

/// All feasible cube vertices as n-bit masks (bit i set = coordinate +1).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionSet {
    pub n: usize,
    pub members: Vec<u32>,
}

/// Exact enumeration of the solution set.
///
/// Walks vertices in reflected-Gray-code order so each step flips a single
/// coordinate and updates `G s` in O(m).
pub fn enumerate_solutions(inst: &McInstance) -> Result<SolutionSet> {
    if inst.n > ENUM_BUDGET_BITS {
        return Err(Error::BudgetExceeded(format!(
            "full enumeration limited to n <= {ENUM_BUDGET_BITS}, got n = {}",
            inst.n
        )));
    }
    let n = inst.n;
    let m = inst.m;
    let thresh = inst.kappa * (n as f64).sqrt();
    // start at mask 0 = all coordinates -1
    let mut t: Vec<f64> = (0..m)
        .map(|i| -inst.g[i * n..(i + 1) * n].iter().sum::<f64>())
        .collect();
    let mut members = Vec::new();
    let mut mask: u32 = 0;
    let total: u64 = 1u64 << n;
    for k in 0..total {
        if k > 0 {
            let j = k.trailing_zeros() as usize;
            let bit = 1u32 << j;
            mask ^= bit;
            let sign = if mask & bit != 0 { 2.0 } else { -2.0 };
            for i in 0..m {
                t[i] += sign * inst.g[i * n + j];
            }
        }
        if t.iter().all(|&v| v >= thresh) {
            members.push(mask);
        }
    }
    members.sort_unstable();
    Ok(SolutionSet { n, members })
}

/// How reference configurations are scanned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReferenceMode {
    /// Every cube vertex (budget n <= 20).
    Exhaustive,
    /// The given number of references: half uniform vertices, half solutions
    /// perturbed to exact distance d. Yields a lower bound on the true max.
    Sampled(usize),
}

/// Result of an empirical local-entropy evaluation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LocalEntropy {
    /// (1/n) log of the best per-reference count; -inf when no solutions.
    pub value: f64,
    pub best_count: u64,
    pub empty_solution_set: bool,
    /// True in sampled mode: the scan may have missed the best reference.
    pub lower_bound: bool,
}

fn admissible_distance(n: usize, delta_bar: f64) -> Result<u32> {
    if !(-1.0..=1.0).contains(&delta_bar) {
        return Err(invalid(format!(
            "delta_bar must lie in [-1,1], got {delta_bar}"
        )));
    }
    let dd = n as f64 * (1.0 - delta_bar) / 2.0;
    let d = dd.round();
    if (dd - d).abs() > 1e-9 {
        let nearest = 1.0 - 2.0 * d.clamp(0.0, n as f64) / n as f64;
        return Err(invalid(format!(
            "delta_bar = {delta_bar} gives non-integer Hamming distance {dd}; \
             nearest admissible delta_bar is {nearest}"
        )));
    }
    Ok(d as u32)
}

fn count_at_distance(members: &[u32], reference: u32, d: u32) -> u64 {
    members
        .iter()
        .filter(|&&x| (x ^ reference).count_ones() == d)
        .count() as u64
}

/// Worst-case empirical local entropy at exact overlap delta_bar.
pub fn empirical_local_entropy(
    inst: &McInstance,
    sols: &SolutionSet,
    delta_bar: f64,
    mode: ReferenceMode,
) -> Result<LocalEntropy> {
    if sols.n != inst.n {
        return Err(invalid("solution set does not match the instance"));
    }
    let d = admissible_distance(inst.n, delta_bar)?;
    if sols.members.is_empty() {
        return Ok(LocalEntropy {
            value: f64::NEG_INFINITY,
            best_count: 0,
            empty_solution_set: true,
            lower_bound: false,
        });
    }
    let best = match mode {
        ReferenceMode::Exhaustive => {
            if inst.n > EXHAUSTIVE_REF_BITS {
                return Err(Error::BudgetExceeded(format!(
                    "exhaustive reference scan limited to n <= {EXHAUSTIVE_REF_BITS}, got n = {}",
                    inst.n
                )));
            }
            (0u64..1u64 << inst.n)
                .into_par_iter()
                .map(|r| count_at_distance(&sols.members, r as u32, d))
                .max()
                .unwrap_or(0)
        }
        ReferenceMode::Sampled(count) => {
            if count == 0 {
                return Err(invalid("sampled mode needs at least one reference"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(inst.seed ^ 0x9e37_79b9_7f4a_7c15);
            let vertex_mask: u32 = if inst.n == 32 {
                u32::MAX
            } else {
                (1u32 << inst.n) - 1
            };
            let mut refs = Vec::with_capacity(count);
            for k in 0..count {
                if k % 2 == 0 {
                    refs.push(rng.next_u32() & vertex_mask);
                } else {
                    // a solution pushed to exact distance d
                    let base = sols.members[rng.gen_range(0..sols.members.len())];
                    let mut idx: Vec<usize> = (0..inst.n).collect();
                    idx.partial_shuffle(&mut rng, d as usize);
                    let flip = idx[..d as usize]
                        .iter()
                        .fold(0u32, |acc, &i| acc | (1 << i));
                    refs.push(base ^ flip);
                }
            }
            refs.into_par_iter()
                .map(|r| count_at_distance(&sols.members, r, d))
                .max()
                .unwrap_or(0)
        }
    };
    Ok(LocalEntropy {
        value: if best == 0 {
            f64::NEG_INFINITY
        } else {
            (best as f64).ln() / inst.n as f64
        },
        best_count: best,
        empty_solution_set: false,
        lower_bound: matches!(mode, ReferenceMode::Sampled(_)),
    })
}

/// Per-overlap mean and standard error over independent instances.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CurveStat {
    pub delta_bar: f64,
    pub mean: f64,
    pub std_error: f64,
}

/// Finite-n estimate of the local-entropy curve. Instances are seeded
/// `base_seed + index`; references scan exhaustively up to n = 20 and fall
/// back to 2^16 sampled references above that.
pub fn empirical_curve(
    n: usize,
    alpha: f64,
    kappa: f64,
    deltas: &[f64],
    instances: usize,
    base_seed: u64,
) -> Result<Vec<CurveStat>> {
    if instances == 0 {
        return Err(invalid("need at least one instance"));
    }
    for &d in deltas {
        admissible_distance(n, d)?;
    }
    let mode = if n <= EXHAUSTIVE_REF_BITS {
        ReferenceMode::Exhaustive
    } else {
        ReferenceMode::Sampled(1 << 16)
    };
    let mut values = vec![Vec::with_capacity(instances); deltas.len()];
    for i in 0..instances {
        let inst = sample_instance(n, alpha, kappa, base_seed + i as u64)?;
        let sols = enumerate_solutions(&inst)?;
        for (k, &delta) in deltas.iter().enumerate() {
            let le = empirical_local_entropy(&inst, &sols, delta, mode)?;
            values[k].push(le.value);
        }
    }
    Ok(deltas
        .iter()
        .zip(values)
        .map(|(&delta_bar, vs)| {
            let nn = vs.len() as f64;
            let mean = vs.iter().sum::<f64>() / nn;
            let std_error = if vs.len() < 2 || !mean.is_finite() {
                0.0
            } else {
                let var = vs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nn - 1.0);
                (var / nn).sqrt()
            };
            CurveStat {
                delta_bar,
                mean,
                std_error,
            }
        })
        .collect())
}

/// Exact binomial coefficient, enough headroom for n <= 30.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}
