//! Composite Gauss-Legendre rules for Gaussian-measure integrals whose
//! integrands carry a fold kink, a sharp erfc boundary layer, or a strong
//! exponential tilt.
//!
//! A plain Gauss-Hermite tensor rule stalls on such integrands: the fold is
//! only C^0 and the erfc transition narrows like sqrt(1-p1), so doubling the
//! order moves the value at the 1e-6 level. Aligning panel edges with the
//! structure point restores per-panel analyticity and geometric convergence;
//! panels are graded geometrically away from the structure point so that
//! arbitrarily thin transition layers stay resolved, and the maximum panel
//! width is capped by the caller when the integrand carries an exponential
//! tilt rate.

/// Reference Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub(crate) struct LegendreRule {
    pub nodes: Vec<f64>,
    pub log_weights: Vec<f64>,
}

impl LegendreRule {
    /// Newton refinement of Chebyshev initial guesses; standard recurrence.
    pub fn new(m: usize) -> Self {
        assert!(m >= 2);
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        let half = m.div_ceil(2);
        for i in 0..half {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = 1.0;
                let mut p2 = 0.0;
                for j in 0..m {
                    let p3 = p2;
                    p2 = p1;
                    p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
                }
                pp = m as f64 * (z * p1 - p2) / (z * z - 1.0);
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = -z;
            nodes[m - 1 - i] = z;
            let w = 2.0 / ((1.0 - z * z) * pp * pp);
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        LegendreRule { nodes, log_weights }
    }
}

/// A quadrature rule for `int phi(x) f(x) dx` over [-radius, radius] with
/// the standard normal density `phi`, panel edges aligned to a structure
/// point, geometrically graded around it and capped at `base` width.
#[derive(Debug, Clone)]
pub(crate) struct GaussianRule {
    pub nodes: Vec<f64>,
    /// log(panel_weight * phi(node))
    pub log_weights: Vec<f64>,
}

const LOG_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn panel_edges(structure: f64, width: f64, radius: f64, base: f64) -> Vec<f64> {
    let base = base.clamp(1e-3, 64.0);
    let mut edges: Vec<f64> = Vec::new();
    if structure <= -radius || structure >= radius {
        // no interior structure: uniform panels
        let n = (2.0 * radius / base).ceil() as usize;
        for k in 0..=n {
            edges.push(-radius + 2.0 * radius * k as f64 / n as f64);
        }
        return edges;
    }
    edges.push(structure);
    for sign in [-1.0, 1.0] {
        let mut x = structure;
        let mut step = width.min(base).max(1e-14);
        loop {
            x += sign * step;
            if x <= -radius || x >= radius {
                break;
            }
            edges.push(x);
            step = (step * 2.0).min(base);
        }
        edges.push(sign * radius);
    }
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup();
    edges
}

impl GaussianRule {
    pub fn build(
        gl: &LegendreRule,
        structure: f64,
        width: f64,
        radius: f64,
        base: f64,
    ) -> Self {
        let edges = panel_edges(structure, width, radius, base);
        let m = gl.nodes.len();
        let npanel = edges.len() - 1;
        let mut nodes = Vec::with_capacity(npanel * m);
        let mut log_weights = Vec::with_capacity(npanel * m);
        for p in 0..npanel {
            let (a, b) = (edges[p], edges[p + 1]);
            let c = 0.5 * (a + b);
            let r = 0.5 * (b - a);
            let log_r = r.ln();
            for i in 0..m {
                let x = c + r * gl.nodes[i];
                nodes.push(x);
                log_weights.push(log_r + gl.log_weights[i] - 0.5 * x * x - LOG_SQRT_2PI);
            }
        }
        GaussianRule { nodes, log_weights }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_integrates_polynomials() {
        let gl = LegendreRule::new(8);
        // int_{-1}^{1} x^k dx
        for k in 0..15usize {
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            let got: f64 = gl
                .nodes
                .iter()
                .zip(&gl.log_weights)
                .map(|(&x, &lw)| lw.exp() * x.powi(k as i32))
                .sum();
            assert_abs_diff_eq!(got, exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn gaussian_rule_total_mass() {
        let gl = LegendreRule::new(16);
        let rule = GaussianRule::build(&gl, 0.3, 0.01, 10.0, 2.0);
        let total: f64 = rule.log_weights.iter().map(|&lw| lw.exp()).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn gaussian_rule_resolves_kinked_integrand() {
        // E |Z - 0.4| = closed form via folded normal mean
        let s = 0.4_f64;
        let exact = 2.0 * (-0.5 * s * s).exp() / (2.0 * std::f64::consts::PI).sqrt()
            + s * libm::erf(s / std::f64::consts::SQRT_2);
        let gl = LegendreRule::new(16);
        let rule = GaussianRule::build(&gl, s, 1.0, 10.0, 2.0);
        let got: f64 = rule
            .nodes
            .iter()
            .zip(&rule.log_weights)
            .map(|(&x, &lw)| lw.exp() * (x - s).abs())
            .sum();
        assert_abs_diff_eq!(got, exact, epsilon = 1e-13);
    }

    #[test]
    fn gaussian_rule_resolves_thin_layer() {
        // E sigmoid((Z - 1.3)/1e-4) ~ Phi(-1.3) up to the O(w^2) smoothing
        // correction; an unaligned rule misses this by ~1e-3
        let k = 1.3;
        let w = 1e-4;
        let exact = 0.5 * libm::erfc(k / std::f64::consts::SQRT_2);
        let gl = LegendreRule::new(16);
        let rule = GaussianRule::build(&gl, k, w, 10.0, 2.0);
        let got: f64 = rule
            .nodes
            .iter()
            .zip(&rule.log_weights)
            .map(|(&x, &lw)| lw.exp() / (1.0 + (-(x - k) / w).exp()))
            .sum();
        assert_abs_diff_eq!(got, exact, epsilon = 1e-8);
    }

    #[test]
    fn gaussian_rule_handles_strong_tilt() {
        // E e^{sigma Z} = e^{sigma^2/2} with sigma = 22: needs capped panels
        let sigma = 22.0_f64;
        let radius = sigma + 10.0;
        let gl = LegendreRule::new(16);
        let base = (16.0 / sigma).min(2.0);
        let rule = GaussianRule::build(&gl, 0.0, 1.0, radius, base);
        let got: f64 = rule
            .nodes
            .iter()
            .zip(&rule.log_weights)
            .map(|(&x, &lw)| (lw + sigma * x - 0.5 * sigma * sigma).exp())
            .sum();
        assert_abs_diff_eq!(got, 1.0, epsilon = 1e-11);
    }
}
