//! Gauss-Hermite quadrature for standard-normal expectations.

use crate::error::{invalid, Result};

/// Gauss-Hermite rule in probabilists' normalization: `E f(Z) ~ sum w_i f(x_i)`
/// for `Z ~ N(0,1)`, weights summing to 1.
///
/// A rule of order n integrates polynomials of degree 2n-1 exactly against
/// the standard normal density. Nodes are strictly increasing and symmetric
/// about 0 by construction (the negative half mirrors the positive half).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// E f(Z) over the grid.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .collect();
        super::pairwise_sum(&terms)
    }
}

/// Builds the probabilists' Gauss-Hermite rule of the given order.
///
/// Roots of the Hermite polynomial are found by Newton refinement of
/// asymptotic initial guesses, evaluating the orthonormal recurrence
/// (values stay O(1), so no overflow up to large orders). Physicists'
/// nodes/weights are then rescaled to the standard-normal measure:
/// `x -> sqrt(2) x`, `w -> w / sqrt(pi)`.
pub fn gauss_hermite_grid(order: usize) -> Result<QuadratureGrid> {
    if order == 0 {
        return Err(invalid("quadrature order must be >= 1"));
    }
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];

    // pi^(-1/4), first orthonormal Hermite function value
    const PIM4: f64 = 0.751_125_544_464_942_5;
    const MAX_ITER: usize = 100;
    let half = n.div_ceil(2);

    let mut z = 0.0_f64;
    for i in 0..half {
        // initial guesses marching inward from the largest root
        z = match i {
            0 => {
                let a = (2 * n + 1) as f64;
                a.sqrt() - 1.85575 * a.powf(-1.0 / 6.0)
            }
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[n - 1],
            3 => 1.91 * z - 0.91 * nodes[n - 2],
            _ => 2.0 * z - nodes[n - i + 1],
        };
        let mut pp = 0.0;
        for _ in 0..MAX_ITER {
            // orthonormal physicists' recurrence
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / j as f64).sqrt() * p2 - ((j - 1) as f64 / j as f64).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-16 * (1.0 + z.abs()) {
                break;
            }
        }
        // store largest-first in the upper half, mirror into the lower half
        nodes[n - 1 - i] = z;
        nodes[i] = -z;
        let w = 2.0 / (pp * pp);
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        // middle root of an odd-order rule is exactly 0
        nodes[n / 2] = 0.0;
    }

    let sqrt_2 = std::f64::consts::SQRT_2;
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    for i in 0..n {
        nodes[i] *= sqrt_2;
        weights[i] *= inv_sqrt_pi;
    }
    Ok(QuadratureGrid {
        order: n,
        nodes,
        weights,
    })
}
