//! Gauss-Legendre rules, tensor products over parameter boxes, and the
//! 3-point triangle rule.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Nodes and weights on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..(order + 1) / 2 {
            // Newton on P_n starting from the Chebyshev-like guess.
            let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite tensor Gauss-Legendre configuration for parameter boxes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quadrature {
    /// Points per axis per panel.
    pub order: usize,
    /// Equal panels per axis.
    pub panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            order: 8,
            panels: 1,
        }
    }
}

impl Quadrature {
    pub fn new(order: usize, panels: usize) -> Self {
        Self { order, panels }
    }

    /// Nodes and weights for one axis `[a, b]`.
    pub fn axis_rule(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let gl = GaussLegendre::new(self.order);
        let panels = self.panels.max(1);
        let width = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * self.order);
        let mut weights = Vec::with_capacity(panels * self.order);
        for p in 0..panels {
            let lo = a + p as f64 * width;
            let mid = lo + 0.5 * width;
            for (x, w) in gl.nodes.iter().zip(&gl.weights) {
                nodes.push(mid + 0.5 * width * x);
                weights.push(0.5 * width * w);
            }
        }
        (nodes, weights)
    }

    /// Tensor-product points over a box, as `(point, weight)` pairs in
    /// lexicographic order (last axis fastest).
    pub fn box_points(&self, bounds: &[(f64, f64)]) -> Vec<(Vec<f64>, f64)> {
        let rules: Vec<_> = bounds.iter().map(|&(a, b)| self.axis_rule(a, b)).collect();
        let mut out = vec![(Vec::with_capacity(bounds.len()), 1.0)];
        for (nodes, weights) in &rules {
            let mut next = Vec::with_capacity(out.len() * nodes.len());
            for (p, w) in &out {
                for (x, wx) in nodes.iter().zip(weights) {
                    let mut q = p.clone();
                    q.push(*x);
                    next.push((q, w * wx));
                }
            }
            out = next;
        }
        out
    }
}

/// Degree-2 symmetric rule on a triangle: barycentric points with one
/// coordinate 2/3, weights 1/3 of the area each.
pub const TRIANGLE_RULE: [([f64; 3], f64); 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(8);
        for deg in 0..=15 {
            let approx: f64 = gl
                .nodes
                .iter()
                .zip(&gl.weights)
                .map(|(x, w)| w * x.powi(deg))
                .sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((approx - exact).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn composite_rule_on_sine() {
        let q = Quadrature::new(8, 2);
        let (x, w) = q.axis_rule(0.0, PI);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.sin()).sum();
        assert!((s - 2.0).abs() < 1e-13);
    }

    #[test]
    fn triangle_rule_reproduces_p1_mass() {
        // int l_i l_j over the reference triangle (area 1/2): (1 + d_ij) / 24
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = TRIANGLE_RULE
                    .iter()
                    .map(|(b, w)| 0.5 * w * b[i] * b[j])
                    .sum();
                let exact = if i == j { 2.0 / 24.0 } else { 1.0 / 24.0 };
                assert!((s - exact).abs() < 1e-15);
            }
        }
    }
}
