use std::f64::consts::PI;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

/// Scalar spatial shape used by the built-in forces and initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    #[default]
    Uniform,
    /// `offset + slope * x_0`.
    Linear { offset: f64, slope: f64 },
    /// `prod_i sin(pi x_i)`.
    SineBump,
}

impl Profile {
    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Profile::Uniform => 1.0,
            Profile::Linear { offset, slope } => offset + slope * x[0],
            Profile::SineBump => x.iter().map(|xi| (PI * xi).sin()).product(),
        }
    }

    /// Gradient with respect to `x`, length `x.len()`.
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match *self {
            Profile::Uniform => out.iter_mut().for_each(|g| *g = 0.0),
            Profile::Linear { slope, .. } => {
                out.iter_mut().for_each(|g| *g = 0.0);
                out[0] = slope;
            }
            Profile::SineBump => {
                for (i, g) in out.iter_mut().enumerate() {
                    *g = x
                        .iter()
                        .enumerate()
                        .map(|(j, xj)| if i == j { PI * (PI * xj).cos() } else { (PI * xj).sin() })
                        .product();
                }
            }
        }
    }
}

/// External force `f(t, x) in R^m`.
pub trait ForceField: Send + Sync + Debug {
    fn evaluate(&self, t: f64, x: &[f64], out: &mut [f64]);

    /// Writes `df/dt` and returns `true` when an analytic derivative is available.
    fn time_derivative(&self, _t: f64, _x: &[f64], _out: &mut [f64]) -> bool {
        false
    }

    /// Time integrability exponent `a` of `df/dt` (`inf` for smooth forces). For forces with
    /// `df/dt` in `L^b` for every `b < a`, the supremum `a` is reported.
    fn time_exponent(&self) -> f64;

    fn space_exponent(&self) -> f64 {
        2.0
    }

    /// Theoretical time rate `min(1, a - 1)` of the squared error.
    fn time_rate(&self) -> f64 {
        (self.time_exponent() - 1.0).min(1.0)
    }

    fn components(&self) -> usize;

    fn describe(&self) -> String;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroForce {
    pub components: usize,
}

impl ForceField for ZeroForce {
    fn evaluate(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }

    fn time_derivative(&self, _t: f64, _x: &[f64], out: &mut [f64]) -> bool {
        out.iter_mut().for_each(|v| *v = 0.0);
        true
    }

    fn time_exponent(&self) -> f64 {
        f64::INFINITY
    }

    fn components(&self) -> usize {
        self.components
    }

    fn describe(&self) -> String {
        "0".into()
    }
}

/// `f(t, x) = slope * t * profile(x) * direction`.
#[derive(Debug, Clone, PartialEq)]
pub struct RampForce {
    pub slope: f64,
    pub profile: Profile,
    pub direction: Vec<f64>,
}

impl ForceField for RampForce {
    fn evaluate(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let s = self.slope * t * self.profile.value(x);
        for (o, e) in out.iter_mut().zip(&self.direction) {
            *o = s * e;
        }
    }

    fn time_derivative(&self, _t: f64, x: &[f64], out: &mut [f64]) -> bool {
        let s = self.slope * self.profile.value(x);
        for (o, e) in out.iter_mut().zip(&self.direction) {
            *o = s * e;
        }
        true
    }

    fn time_exponent(&self) -> f64 {
        f64::INFINITY
    }

    fn components(&self) -> usize {
        self.direction.len()
    }

    fn describe(&self) -> String {
        format!("{} t {:?}", self.slope, self.profile)
    }
}

/// `f(t, x) = amplitude * t^exponent * profile(x) * direction` with `0 < exponent < 1`;
/// `df/dt` lies in `L^b(0, T)` exactly for `b < 1 / (1 - exponent)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoughForce {
    pub exponent: f64,
    pub amplitude: f64,
    pub profile: Profile,
    pub direction: Vec<f64>,
}

impl ForceField for RoughForce {
    fn evaluate(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let s = self.amplitude * t.max(0.0).powf(self.exponent) * self.profile.value(x);
        for (o, e) in out.iter_mut().zip(&self.direction) {
            *o = s * e;
        }
    }

    fn time_derivative(&self, t: f64, x: &[f64], out: &mut [f64]) -> bool {
        if t <= 0.0 {
            return false;
        }
        let s = self.amplitude * self.exponent * t.powf(self.exponent - 1.0) * self.profile.value(x);
        for (o, e) in out.iter_mut().zip(&self.direction) {
            *o = s * e;
        }
        true
    }

    fn time_exponent(&self) -> f64 {
        1.0 / (1.0 - self.exponent)
    }

    fn components(&self) -> usize {
        self.direction.len()
    }

    fn describe(&self) -> String {
        format!("{} t^{} {:?}", self.amplitude, self.exponent, self.profile)
    }
}

/// Initial datum `u0: Omega -> R^m` with zero trace.
pub trait InitialDatum: Send + Sync + Debug {
    fn value(&self, x: &[f64], out: &mut [f64]);

    /// Row-major `m x d` Jacobian.
    fn gradient(&self, x: &[f64], out: &mut [f64]);

    fn describe(&self) -> String;
}

/// `u0 = amplitude * profile(x) * direction`. Only profiles vanishing on the boundary
/// (zero amplitude or [`Profile::SineBump`]) are accepted by the config loader.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileDatum {
    pub amplitude: f64,
    pub profile: Profile,
    pub direction: Vec<f64>,
}

impl ProfileDatum {
    pub fn zero(components: usize) -> Self {
        Self { amplitude: 0.0, profile: Profile::Uniform, direction: vec![1.0; components] }
    }
}

impl InitialDatum for ProfileDatum {
    fn value(&self, x: &[f64], out: &mut [f64]) {
        let s = self.amplitude * self.profile.value(x);
        for (o, e) in out.iter_mut().zip(&self.direction) {
            *o = s * e;
        }
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        let mut g = vec![0.0; d];
        self.profile.gradient(x, &mut g);
        for (a, e) in self.direction.iter().enumerate() {
            for i in 0..d {
                out[a * d + i] = self.amplitude * e * g[i];
            }
        }
    }

    fn describe(&self) -> String {
        if self.amplitude == 0.0 {
            "0".into()
        } else {
            format!("{} {:?}", self.amplitude, self.profile)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rough_force_exponents() {
        let f = RoughForce { exponent: 0.4, amplitude: 1.0, profile: Profile::Uniform, direction: vec![1.0] };
        assert!((f.time_exponent() - 5.0 / 3.0).abs() < 1e-15);
        assert!((f.time_rate() - 2.0 / 3.0).abs() < 1e-15);
        let ramp = RampForce { slope: 1.0, profile: Profile::Uniform, direction: vec![1.0] };
        assert_eq!(ramp.time_rate(), 1.0);
    }

    #[test]
    fn sine_bump_gradient_matches_difference() {
        let p = Profile::SineBump;
        let x = [0.3, 0.7];
        let mut g = [0.0; 2];
        p.gradient(&x, &mut g);
        for i in 0..2 {
            let mut a = x;
            let mut b = x;
            a[i] += 1e-6;
            b[i] -= 1e-6;
            let fd = (p.value(&a) - p.value(&b)) / 2e-6;
            assert!((fd - g[i]).abs() < 1e-8);
        }
    }
}
