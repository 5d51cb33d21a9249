use std::fmt::Debug;

/// Coefficient tensor `A(t, x)` of the elliptic regularizer, flattened with
/// [`tensor_index`].
pub trait EllipticTensor: Send + Sync + Debug {
    fn evaluate(&self, t: f64, x: &[f64], out: &mut [f64]);

    /// Ellipticity modulus `kappa`.
    fn ellipticity(&self) -> f64;

    /// Lipschitz constant in `(t, x)`.
    fn lipschitz_constant(&self) -> f64;

    fn components(&self) -> usize;

    fn dimension(&self) -> usize;

    /// `true` when `A` does not depend on `t`, so one assembled stiffness serves all steps.
    fn is_time_independent(&self) -> bool {
        false
    }

    fn describe(&self) -> String;
}

/// Flat index of `A^{alpha beta}_{i j}`.
#[inline]
pub fn tensor_index(m: usize, d: usize, alpha: usize, i: usize, beta: usize, j: usize) -> usize {
    ((alpha * d + i) * m + beta) * d + j
}

/// `A^{ab}_{ij}(t) = (base + time_slope t) delta_ab delta_ij`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropicTensor {
    pub base: f64,
    pub time_slope: f64,
    pub components: usize,
    pub dimension: usize,
}

impl IsotropicTensor {
    pub fn identity(components: usize, dimension: usize) -> Self {
        Self { base: 1.0, time_slope: 0.0, components, dimension }
    }
}

impl EllipticTensor for IsotropicTensor {
    fn evaluate(&self, t: f64, _x: &[f64], out: &mut [f64]) {
        let (m, d) = (self.components, self.dimension);
        out.iter_mut().for_each(|v| *v = 0.0);
        let a = self.base + self.time_slope * t;
        for alpha in 0..m {
            for i in 0..d {
                out[tensor_index(m, d, alpha, i, alpha, i)] = a;
            }
        }
    }

    fn ellipticity(&self) -> f64 {
        // time_slope >= 0 is enforced at construction from config
        self.base
    }

    fn lipschitz_constant(&self) -> f64 {
        self.time_slope.abs()
    }

    fn components(&self) -> usize {
        self.components
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn is_time_independent(&self) -> bool {
        self.time_slope == 0.0
    }

    fn describe(&self) -> String {
        format!("isotropic({} + {} t)", self.base, self.time_slope)
    }
}

/// `A^{ab}_{ij}(x) = c_i(x) delta_ab delta_ij` with `c_i(x) = coefficients[i] (1 + variation x_i)`
/// on the unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalTensor {
    pub coefficients: Vec<f64>,
    pub variation: f64,
    pub components: usize,
}

impl EllipticTensor for DiagonalTensor {
    fn evaluate(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        let (m, d) = (self.components, self.coefficients.len());
        out.iter_mut().for_each(|v| *v = 0.0);
        for alpha in 0..m {
            for i in 0..d {
                out[tensor_index(m, d, alpha, i, alpha, i)] = self.coefficients[i] * (1.0 + self.variation * x[i]);
            }
        }
    }

    fn ellipticity(&self) -> f64 {
        let lo = self.variation.min(0.0);
        self.coefficients.iter().fold(f64::INFINITY, |a, &c| a.min(c * (1.0 + lo)))
    }

    fn lipschitz_constant(&self) -> f64 {
        self.coefficients.iter().fold(0.0, |a, &c| a.max((c * self.variation).abs()))
    }

    fn components(&self) -> usize {
        self.components
    }

    fn dimension(&self) -> usize {
        self.coefficients.len()
    }

    fn is_time_independent(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        format!("diagonal({:?}, variation {})", self.coefficients, self.variation)
    }
}
