//! Composite Gauss–Legendre quadrature with a panel-doubling error check.
//!
//! Node sets are fixed and summation order is deterministic, so results are
//! bit-reproducible.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            // Newton iteration from the Chebyshev-like initial guess
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
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` over `[a, b]` split into `panels` equal panels.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let half = 0.5 * h;
        let mut total = 0.0;
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            let panel: f64 = self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| w * f(mid + half * x))
                .sum();
            total += panel * half;
        }
        total
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite rule with a fixed node budget per π of integration range, checked
/// against the same rule with doubled panel count.
#[derive(Clone, Debug)]
pub struct CheckedQuadrature {
    rule: GaussLegendre,
    panels_per_pi: usize,
    tolerance: f64,
}

/// Result of a checked integration: the refined value and the difference to
/// the coarse one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
}

impl Default for CheckedQuadrature {
    /// 16 panels of 16 nodes (256 nodes) per π, tolerance 1e-10 absolute.
    fn default() -> Self {
        Self::new(16, 16, 1e-10)
    }
}

impl CheckedQuadrature {
    pub fn new(order: usize, panels_per_pi: usize, tolerance: f64) -> Self {
        Self { rule: GaussLegendre::new(order), panels_per_pi, tolerance }
    }

    pub fn nodes_per_pi(&self) -> usize {
        self.rule.order() * self.panels_per_pi
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<Integral> {
        let span = ((b - a).abs() / PI).max(1e-300);
        let panels = ((self.panels_per_pi as f64 * span).ceil() as usize).max(1);
        let coarse = self.rule.integrate(&f, a, b, panels);
        let fine = self.rule.integrate(&f, a, b, 2 * panels);
        let error_estimate = (fine - coarse).abs();
        if !fine.is_finite() || error_estimate > self.tolerance {
            return Err(Error::Quadrature { achieved: error_estimate, target: self.tolerance });
        }
        Ok(Integral { value: fine, error_estimate })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 16, 64] {
            let gl = GaussLegendre::new(n);
            let s: f64 = gl.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "order {n}: {s}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let gl = GaussLegendre::new(8);
        for deg in 0..16 {
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let got = gl.integrate(|x| x.powi(deg), -1.0, 1.0, 1);
            assert!((got - exact).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn known_nodes() {
        let gl = GaussLegendre::new(3);
        let r = (0.6f64).sqrt();
        assert!((gl.nodes()[0] + r).abs() < 1e-15);
        assert!(gl.nodes()[1].abs() < 1e-15);
        assert!((gl.weights()[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn checked_trig_integral() {
        let q = CheckedQuadrature::default();
        assert_eq!(q.nodes_per_pi(), 256);
        let r = q.integrate(|x| x.cos().powi(2), 0.0, 2.0 * PI).unwrap();
        assert!((r.value - PI).abs() < 1e-13);
        let r = q.integrate(|x| (-x * x).exp(), -6.0, 6.0).unwrap();
        assert!((r.value - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn reports_nonconvergence() {
        let q = CheckedQuadrature::new(2, 1, 1e-14);
        let err = q.integrate(|x| (50.0 * x).sin().abs(), 0.0, PI).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }
}
