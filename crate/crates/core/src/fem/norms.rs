use crate::error::{Error, Result};
use crate::fem::{FemSpace, FieldWithGradient};
use crate::linalg::dot;
use crate::quadrature::SimplexRule;

/// `||v||_{L^2}` through the consistent mass.
pub fn l2(space: &FemSpace, v: &[f64]) -> f64 {
    dot(v, &space.mass().mul_vec(v)).max(0.0).sqrt()
}

/// `||grad v||_{L^2}` (Frobenius norm of the Jacobian).
pub fn h1_semi(space: &FemSpace, v: &[f64]) -> f64 {
    let (d, m) = (space.dim(), space.components());
    let mut g = vec![0.0; m * d];
    let mesh = space.mesh();
    let mut acc = 0.0;
    for c in 0..mesh.num_cells() {
        space.cell_gradient(v, c, &mut g);
        acc += mesh.volume(c) * g.iter().map(|x| x * x).sum::<f64>();
    }
    acc.sqrt()
}

/// `||v||_{L^p}` for `p` in `{2, 4, 6}`, with a cell rule exact for the degree-`p` integrand.
pub fn lp(space: &FemSpace, v: &[f64], p: f64) -> Result<f64> {
    let half = match p {
        2.0 => 1,
        4.0 => 2,
        6.0 => 3,
        _ => return Err(Error::UnsupportedExponent(p)),
    };
    let rule = SimplexRule::gauss(space.dim(), 4);
    let mesh = space.mesh();
    let mut val = vec![0.0; space.components()];
    let mut acc = 0.0;
    for c in 0..mesh.num_cells() {
        let mut cell = 0.0;
        for (lambda, w) in rule.points.iter().zip(&rule.weights) {
            space.cell_value(v, c, lambda, &mut val);
            cell += w * val.iter().map(|x| x * x).sum::<f64>().powi(half);
        }
        acc += mesh.volume(c) * cell;
    }
    Ok(acc.powf(1.0 / p))
}

/// `||grad v||_{L^p}`; exact for any `p >= 1` since P1 gradients are cellwise constant.
pub fn gradient_lp(space: &FemSpace, v: &[f64], p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::UnsupportedExponent(p));
    }
    let (d, m) = (space.dim(), space.components());
    let mut g = vec![0.0; m * d];
    let mesh = space.mesh();
    let mut acc = 0.0;
    for c in 0..mesh.num_cells() {
        space.cell_gradient(v, c, &mut g);
        acc += mesh.volume(c) * g.iter().map(|x| x * x).sum::<f64>().powf(0.5 * p);
    }
    Ok(acc.powf(1.0 / p))
}

/// Squared `L^2` and `H^1`-seminorm errors of a field against a function.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorNormsSq {
    pub l2: f64,
    pub h1_semi: f64,
}

impl ErrorNormsSq {
    /// Squared `W^{1,2}` norm.
    pub fn w12(&self) -> f64 {
        self.l2 + self.h1_semi
    }
}

/// Errors of `v` against `exact(x, value, jacobian)` with a Gauss rule of order 4 per cell.
pub fn error_norms_sq(space: &FemSpace, v: &[f64], exact: &FieldWithGradient<'_>) -> ErrorNormsSq {
    let (d, m) = (space.dim(), space.components());
    let rule = SimplexRule::gauss(d, 4);
    let mesh = space.mesh();
    let (mut uh, mut gh) = (vec![0.0; m], vec![0.0; m * d]);
    let (mut ue, mut ge) = (vec![0.0; m], vec![0.0; m * d]);
    let mut x = vec![0.0; d];
    let mut out = ErrorNormsSq::default();
    for c in 0..mesh.num_cells() {
        space.cell_gradient(v, c, &mut gh);
        let vol = mesh.volume(c);
        for (lambda, w) in rule.points.iter().zip(&rule.weights) {
            mesh.map_point(c, lambda, &mut x);
            space.cell_value(v, c, lambda, &mut uh);
            exact(&x, &mut ue, &mut ge);
            out.l2 += vol * w * uh.iter().zip(&ue).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            out.h1_semi += vol * w * gh.iter().zip(&ge).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        }
    }
    out
}
