use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fem::assembly::{assemble_stiffness, TensorAverager};
use crate::fem::{FemSpace, FieldWithGradient, NodalField};
use crate::linalg::{conjugate_gradient, norm_inf, CgOptions};
use crate::model::{tensor_index, EllipticTensor, InitialDatum};
use crate::quadrature::SimplexRule;

/// Mass used by the discrete elliptic operator and its Green operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassKind {
    #[default]
    Lumped,
    Consistent,
}

/// `int A_bar grad g . grad phi` for every basis function, with `A_bar` the same cell
/// averages as the stiffness and `grad g` integrated by a Gauss rule.
fn ritz_rhs(
    space: &FemSpace,
    g: &FieldWithGradient<'_>,
    tensor: &dyn EllipticTensor,
    t: f64,
) -> Vec<f64> {
    let mesh = space.mesh();
    let (d, m) = (space.dim(), space.components());
    let rule = SimplexRule::gauss(d, 3);
    let mut avg = TensorAverager::new(space);
    let mut x = vec![0.0; d];
    let mut val = vec![0.0; m];
    let mut jac = vec![0.0; m * d];
    let mut gbar = vec![0.0; m * d];
    let mut rhs = vec![0.0; space.num_dofs()];
    for c in 0..mesh.num_cells() {
        gbar.iter_mut().for_each(|v| *v = 0.0);
        for (lambda, w) in rule.points.iter().zip(&rule.weights) {
            mesh.map_point(c, lambda, &mut x);
            g(&x, &mut val, &mut jac);
            for (a, j) in gbar.iter_mut().zip(&jac) {
                *a += w * j;
            }
        }
        let abar = avg.cell(space, tensor, t, c);
        let vol = mesh.volume(c);
        let grads = space.cell_grads(c);
        for (k, &v) in mesh.cell(c).iter().enumerate() {
            let Some(node) = space.dof_of_vertex(v) else { continue };
            for alpha in 0..m {
                let mut s = 0.0;
                for i in 0..d {
                    for beta in 0..m {
                        for j in 0..d {
                            s += abar[tensor_index(m, d, alpha, i, beta, j)] * gbar[beta * d + j] * grads[k * d + i];
                        }
                    }
                }
                rhs[node * m + alpha] += vol * s;
            }
        }
    }
    rhs
}

/// Ritz projection `<A_bar grad (g - P g), grad phi> = 0` for all basis `phi`; `g` supplies its
/// value and row-major Jacobian and must vanish on the boundary.
pub fn ritz_project(
    space: &FemSpace,
    g: &FieldWithGradient<'_>,
    tensor: &dyn EllipticTensor,
    t: f64,
) -> Result<NodalField> {
    let k = assemble_stiffness(space, tensor, t);
    let rhs = ritz_rhs(space, g, tensor, t);
    let values = conjugate_gradient(&k, &rhs, None, CgOptions::default())?;
    space.field(values, Some(t))
}

/// Elliptic projection of the initial datum with `A(0, .)`.
pub fn elliptic_project_initial(
    space: &FemSpace,
    initial: &dyn InitialDatum,
    tensor: &dyn EllipticTensor,
) -> Result<NodalField> {
    ritz_project(space, &|x, v, j| {
        initial.value(x, v);
        initial.gradient(x, j);
    }, tensor, 0.0)
}

/// `max_phi |<A_bar grad (g - P g), grad phi>|` over the basis.
pub fn galerkin_residual(
    space: &FemSpace,
    g: &FieldWithGradient<'_>,
    projected: &NodalField,
    tensor: &dyn EllipticTensor,
    t: f64,
) -> Result<f64> {
    space.check(projected)?;
    let k = assemble_stiffness(space, tensor, t);
    let rhs = ritz_rhs(space, g, tensor, t);
    let kp = k.mul_vec(&projected.values);
    Ok(rhs.iter().zip(&kp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

fn solve_mass(space: &FemSpace, rhs: &[f64], kind: MassKind) -> Result<Vec<f64>> {
    match kind {
        MassKind::Lumped => {
            let m = space.components();
            let w = space.lumped();
            Ok(rhs.iter().enumerate().map(|(i, r)| r / w[i / m]).collect())
        }
        MassKind::Consistent => conjugate_gradient(space.mass(), rhs, None, CgOptions::default()),
    }
}

fn apply_mass(space: &FemSpace, z: &[f64], kind: MassKind) -> Vec<f64> {
    match kind {
        MassKind::Lumped => {
            let m = space.components();
            let w = space.lumped();
            z.iter().enumerate().map(|(i, v)| v * w[i / m]).collect()
        }
        MassKind::Consistent => space.mass().mul_vec(z),
    }
}

/// Discrete elliptic operator: `M xi = -K z`, so that `<L z, phi> = -int grad z : A : grad phi`
/// and `-L` is positive definite.
pub fn discrete_operator_l(
    space: &FemSpace,
    z: &NodalField,
    tensor: &dyn EllipticTensor,
    t: f64,
    kind: MassKind,
) -> Result<NodalField> {
    space.check(z)?;
    let k = assemble_stiffness(space, tensor, t);
    let rhs: Vec<f64> = k.mul_vec(&z.values).iter().map(|v| -v).collect();
    space.field(solve_mass(space, &rhs, kind)?, Some(t))
}

/// Discrete Green operator: `K x = M z`. Composition with [`discrete_operator_l`] gives `-id`.
pub fn discrete_green_g(
    space: &FemSpace,
    z: &NodalField,
    tensor: &dyn EllipticTensor,
    t: f64,
    kind: MassKind,
) -> Result<NodalField> {
    space.check(z)?;
    let k = assemble_stiffness(space, tensor, t);
    let rhs = apply_mass(space, &z.values, kind);
    if norm_inf(&rhs) == 0.0 {
        return Ok(space.zeros(Some(t)));
    }
    space.field(conjugate_gradient(&k, &rhs, None, CgOptions::default())?, Some(t))
}
