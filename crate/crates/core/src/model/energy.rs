use std::fmt::Debug;

use nalgebra::DMatrix;

use crate::model::euclid;

/// Energy density `W0: R^m -> [0, inf)` together with the constants of its growth and
/// semi-monotonicity conditions.
pub trait EnergyDensity: Send + Sync + Debug {
    fn value(&self, v: &[f64]) -> f64;

    fn gradient(&self, v: &[f64], out: &mut [f64]);

    fn hessian(&self, _v: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// Upper bound on the spectral norm of `D^2 W0(v)` over `|v| <= radius`.
    fn hessian_bound(&self, radius: f64) -> f64;

    /// Growth exponent `q`.
    fn growth_exponent(&self) -> f64;

    /// Constant `C` of the growth bounds.
    fn growth_constant(&self) -> f64;

    /// Declared semi-monotonicity modulus `mu`.
    fn monotonicity_modulus(&self) -> f64;

    /// `(sigma, M)` of the third-derivative bound, when known. Metadata only.
    fn third_derivative_bound(&self) -> Option<(f64, f64)> {
        None
    }

    fn describe(&self) -> String;
}

/// `W0(v) = stiffness |v|^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticEnergy {
    pub stiffness: f64,
}

impl EnergyDensity for QuadraticEnergy {
    fn value(&self, v: &[f64]) -> f64 {
        0.5 * self.stiffness * v.iter().map(|x| x * x).sum::<f64>()
    }

    fn gradient(&self, v: &[f64], out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(v) {
            *o = self.stiffness * x;
        }
    }

    fn hessian(&self, v: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(v.len(), v.len()) * self.stiffness)
    }

    fn hessian_bound(&self, _radius: f64) -> f64 {
        self.stiffness
    }

    fn growth_exponent(&self) -> f64 {
        2.0
    }

    fn growth_constant(&self) -> f64 {
        (2.0 / self.stiffness).max(self.stiffness)
    }

    fn monotonicity_modulus(&self) -> f64 {
        0.0
    }

    fn third_derivative_bound(&self) -> Option<(f64, f64)> {
        Some((0.5, 0.0))
    }

    fn describe(&self) -> String {
        format!("{}*|v|^2/2", self.stiffness)
    }
}

/// `W0(v) = gamma (|v|^2 - 1)^2`, `q = 4`, `mu = 4 gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleWell {
    pub gamma: f64,
}

pub fn builtin_double_well(gamma: f64) -> DoubleWell {
    assert!(gamma > 0.0, "double-well gamma must be positive");
    DoubleWell { gamma }
}

impl EnergyDensity for DoubleWell {
    fn value(&self, v: &[f64]) -> f64 {
        let s = v.iter().map(|x| x * x).sum::<f64>() - 1.0;
        self.gamma * s * s
    }

    fn gradient(&self, v: &[f64], out: &mut [f64]) {
        let s = v.iter().map(|x| x * x).sum::<f64>() - 1.0;
        for (o, x) in out.iter_mut().zip(v) {
            *o = 4.0 * self.gamma * s * x;
        }
    }

    fn hessian(&self, v: &[f64]) -> Option<DMatrix<f64>> {
        let m = v.len();
        let s = v.iter().map(|x| x * x).sum::<f64>() - 1.0;
        let vv = DMatrix::from_fn(m, m, |i, j| 2.0 * v[i] * v[j]);
        Some((DMatrix::identity(m, m) * s + vv) * (4.0 * self.gamma))
    }

    fn hessian_bound(&self, radius: f64) -> f64 {
        // eigenvalues 4g(|v|^2 - 1) and 4g(3|v|^2 - 1)
        4.0 * self.gamma * (3.0 * radius * radius - 1.0).max(1.0)
    }

    fn growth_exponent(&self) -> f64 {
        4.0
    }

    fn growth_constant(&self) -> f64 {
        (2.0 / self.gamma).max(8.0 * self.gamma)
    }

    fn monotonicity_modulus(&self) -> f64 {
        4.0 * self.gamma
    }

    fn third_derivative_bound(&self) -> Option<(f64, f64)> {
        // |D^3 W0(v)| <= 24 gamma |v|, bounded on bounded sets
        Some((0.5, f64::INFINITY))
    }

    fn describe(&self) -> String {
        format!("{}*(|v|^2-1)^2", self.gamma)
    }
}

/// `W0(v) = |v|^q` for `q >= 2`; convex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEnergy {
    pub exponent: f64,
}

impl EnergyDensity for PowerEnergy {
    fn value(&self, v: &[f64]) -> f64 {
        euclid(v).powf(self.exponent)
    }

    fn gradient(&self, v: &[f64], out: &mut [f64]) {
        let r = euclid(v);
        let c = if r > 0.0 { self.exponent * r.powf(self.exponent - 2.0) } else { 0.0 };
        for (o, x) in out.iter_mut().zip(v) {
            *o = c * x;
        }
    }

    fn hessian(&self, v: &[f64]) -> Option<DMatrix<f64>> {
        let m = v.len();
        let q = self.exponent;
        let r = euclid(v);
        if r == 0.0 {
            let d = if q == 2.0 { 2.0 } else { 0.0 };
            return Some(DMatrix::identity(m, m) * d);
        }
        let c = q * r.powf(q - 2.0);
        Some(DMatrix::from_fn(m, m, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            c * (id + (q - 2.0) * v[i] * v[j] / (r * r))
        }))
    }

    fn hessian_bound(&self, radius: f64) -> f64 {
        let q = self.exponent;
        q * (q - 1.0) * radius.max(1e-12).powf(q - 2.0)
    }

    fn growth_exponent(&self) -> f64 {
        self.exponent
    }

    fn growth_constant(&self) -> f64 {
        self.exponent
    }

    fn monotonicity_modulus(&self) -> f64 {
        0.0
    }

    fn describe(&self) -> String {
        format!("|v|^{}", self.exponent)
    }
}
