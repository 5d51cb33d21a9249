use std::fmt::Debug;

use crate::model::euclid;

/// Convex, positively 1-homogeneous dissipation density `R1: R^m -> [0, inf)`.
pub trait DissipationPotential: Send + Sync + Debug {
    fn evaluate(&self, w: &[f64]) -> f64;

    /// `argmin_z lambda R1(z) + |z - x|^2 / 2`, written into `out`.
    fn prox(&self, x: &[f64], lambda: f64, out: &mut [f64]);

    /// Global Lipschitz constant of `R1`.
    fn lipschitz_bound(&self) -> f64;

    /// Largest `c` with `R1(z) >= c |z|`.
    fn lower_bound_coeff(&self) -> f64;

    fn describe(&self) -> String;
}

/// `R1(w) = scale |w|` with the Euclidean norm; the prox is block soft-thresholding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsDissipation {
    pub scale: f64,
}

pub fn builtin_abs_dissipation(scale: f64) -> AbsDissipation {
    assert!(scale > 0.0, "dissipation scale must be positive");
    AbsDissipation { scale }
}

impl DissipationPotential for AbsDissipation {
    fn evaluate(&self, w: &[f64]) -> f64 {
        self.scale * euclid(w)
    }

    fn prox(&self, x: &[f64], lambda: f64, out: &mut [f64]) {
        let norm = euclid(x);
        // x = 0 maps to 0
        let factor = if norm > 0.0 { (1.0 - lambda * self.scale / norm).max(0.0) } else { 0.0 };
        for (o, xi) in out.iter_mut().zip(x) {
            *o = factor * xi;
        }
    }

    fn lipschitz_bound(&self) -> f64 {
        self.scale
    }

    fn lower_bound_coeff(&self) -> f64 {
        self.scale
    }

    fn describe(&self) -> String {
        format!("{}*|w|", self.scale)
    }
}

/// `R1(w) = scale * sum_a |w_a|`; componentwise soft-thresholding. Same as
/// [`AbsDissipation`] for scalar fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Dissipation {
    pub scale: f64,
    pub components: usize,
}

impl DissipationPotential for L1Dissipation {
    fn evaluate(&self, w: &[f64]) -> f64 {
        self.scale * w.iter().map(|x| x.abs()).sum::<f64>()
    }

    fn prox(&self, x: &[f64], lambda: f64, out: &mut [f64]) {
        let t = lambda * self.scale;
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = xi.signum() * (xi.abs() - t).max(0.0);
        }
    }

    fn lipschitz_bound(&self) -> f64 {
        self.scale * (self.components as f64).sqrt()
    }

    fn lower_bound_coeff(&self) -> f64 {
        self.scale
    }

    fn describe(&self) -> String {
        format!("{}*|w|_1", self.scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prox1(r: &dyn DissipationPotential, x: f64, lambda: f64) -> f64 {
        let mut out = [0.0];
        r.prox(&[x], lambda, &mut out);
        out[0]
    }

    #[test]
    fn soft_threshold_examples() {
        let r = builtin_abs_dissipation(1.0);
        assert_eq!(prox1(&r, 3.0, 1.0), 2.0);
        assert_eq!(prox1(&r, 0.5, 1.0), 0.0);
        assert_eq!(prox1(&r, -2.0, 0.5), -1.5);
        assert_eq!(prox1(&r, 0.0, 1.0), 0.0);
    }

    #[test]
    fn block_threshold_keeps_direction() {
        let r = builtin_abs_dissipation(2.0);
        let mut out = [0.0; 2];
        r.prox(&[3.0, 4.0], 1.0, &mut out);
        assert!((out[0] - 1.8).abs() < 1e-15 && (out[1] - 2.4).abs() < 1e-15);
        r.prox(&[0.6, 0.8], 1.0, &mut out);
        assert_eq!(out, [0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn prox_satisfies_optimality_inclusion(x in -50.0..50.0f64, y in -50.0..50.0f64, lambda in 0.01..5.0f64, scale in 0.1..3.0f64) {
            let r = builtin_abs_dissipation(scale);
            let mut p = [0.0; 2];
            r.prox(&[x, y], lambda, &mut p);
            let gx = (x - p[0]) / lambda;
            let gy = (y - p[1]) / lambda;
            let pn = euclid(&p);
            if pn == 0.0 {
                prop_assert!(euclid(&[x, y]) <= lambda * scale * (1.0 + 1e-12));
            } else {
                prop_assert!((gx - scale * p[0] / pn).abs() < 1e-9);
                prop_assert!((gy - scale * p[1] / pn).abs() < 1e-9);
            }
        }

        #[test]
        fn l1_prox_is_nonexpansive(a in proptest::collection::vec(-10.0..10.0f64, 3), b in proptest::collection::vec(-10.0..10.0f64, 3), lambda in 0.01..4.0f64) {
            let r = L1Dissipation { scale: 1.5, components: 3 };
            let mut pa = [0.0; 3];
            let mut pb = [0.0; 3];
            r.prox(&a, lambda, &mut pa);
            r.prox(&b, lambda, &mut pb);
            let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            let dp: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x - y).collect();
            prop_assert!(euclid(&dp) <= euclid(&d) + 1e-12);
        }
    }
}
