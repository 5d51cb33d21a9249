//! Quadrature on simplices, stored in barycentric coordinates with weights summing to 1
//! (multiply by the cell volume).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone)]
pub struct SimplexRule {
    /// Barycentric coordinates, `d + 1` entries per point.
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

/// Rules used for evaluating the coefficient tensor on a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientRule {
    /// Midpoint in 1D, edge midpoints in 2D. Exact for quadratics.
    #[default]
    Standard,
    /// Collapsed Gauss rule of the given order.
    Gauss(usize),
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

impl SimplexRule {
    /// Gauss rule with `order` points per direction; exact for degree `2 order - 1` on
    /// segments and `2 order - 2` on triangles (collapsed-coordinate construction).
    pub fn gauss(dim: usize, order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        match dim {
            1 => Self {
                points: x.iter().map(|&s| vec![1.0 - s, s]).collect(),
                weights: w,
            },
            2 => {
                let mut points = Vec::new();
                let mut weights = Vec::new();
                for (a, wa) in x.iter().zip(&w) {
                    for (b, wb) in x.iter().zip(&w) {
                        // (a, b) in unit square -> (s, t) = (a, b (1 - a)) in reference triangle
                        let s = *a;
                        let t = b * (1.0 - a);
                        points.push(vec![1.0 - s - t, s, t]);
                        // Jacobian (1 - a); reference area 1/2 normalised to 1
                        weights.push(2.0 * wa * wb * (1.0 - a));
                    }
                }
                Self { points, weights }
            }
            _ => panic!("unsupported simplex dimension {dim}"),
        }
    }

    pub fn coefficient(dim: usize, rule: CoefficientRule) -> Self {
        match (rule, dim) {
            (CoefficientRule::Standard, 1) => Self { points: vec![vec![0.5, 0.5]], weights: vec![1.0] },
            (CoefficientRule::Standard, 2) => Self {
                points: vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5]],
                weights: vec![1.0 / 3.0; 3],
            },
            (CoefficientRule::Gauss(order), d) => Self::gauss(d, order),
            (_, d) => panic!("unsupported simplex dimension {d}"),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn gauss_legendre_integrates_monomials() {
        for n in 1..8 {
            let (x, w) = gauss_legendre(n);
            for p in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-13, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn triangle_rule_matches_barycentric_moments() {
        // mean of l0^a l1^b l2^c over the triangle is 2 a! b! c! / (a+b+c+2)!
        let rule = SimplexRule::gauss(2, 4);
        for a in 0..=6u32 {
            for b in 0..=(6 - a) {
                for c in 0..=(6 - a - b) {
                    let exact = 2.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2);
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(l, w)| w * l[0].powi(a as i32) * l[1].powi(b as i32) * l[2].powi(c as i32))
                        .sum();
                    assert!((q - exact).abs() < 1e-14, "{a} {b} {c}");
                }
            }
        }
    }

    #[test]
    fn edge_midpoint_rule_is_quadratic_exact() {
        let rule = SimplexRule::coefficient(2, CoefficientRule::Standard);
        let q: f64 = rule.points.iter().zip(&rule.weights).map(|(l, w)| w * l[0] * l[1]).sum();
        assert!((q - 2.0 / 24.0).abs() < 1e-15);
    }
}
