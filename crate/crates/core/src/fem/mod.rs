//! Continuous P1 elements with homogeneous Dirichlet data.
//!
//! Vector fields are stored node-major: entry `i * m + alpha` is component `alpha` at
//! interior node `i`. Boundary vertices carry no dofs.

mod assembly;
mod norms;
mod operators;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::SimplicialMesh;
use crate::model::IsotropicTensor;
use crate::quadrature::CoefficientRule;

pub use assembly::{assemble_load, assemble_mass, assemble_stiffness, lumped_mass};
pub use norms::{error_norms_sq, gradient_lp, h1_semi, l2, lp, ErrorNormsSq};
pub use operators::{
    discrete_green_g, discrete_operator_l, elliptic_project_initial, galerkin_residual, ritz_project, MassKind,
};

/// Spatial field `x -> (value, row-major Jacobian)`.
pub type FieldWithGradient<'a> = dyn Fn(&[f64], &mut [f64], &mut [f64]) + 'a;

static NEXT_SPACE_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone)]
pub struct FemSpace {
    mesh: Arc<SimplicialMesh>,
    components: usize,
    dof_of_vertex: Vec<Option<usize>>,
    vertex_of_dof: Vec<usize>,
    /// Barycentric gradients, `(d + 1) * d` per cell.
    grads: Vec<f64>,
    full_mass: CsrMatrix,
    mass: CsrMatrix,
    lumped: Vec<f64>,
    rule: CoefficientRule,
    id: u64,
}

/// Coefficient vector of a P1 field at an optional time.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    pub values: Vec<f64>,
    pub components: usize,
    pub space_id: u64,
    pub time: Option<f64>,
}

impl NodalField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl FemSpace {
    pub fn new(mesh: Arc<SimplicialMesh>, components: usize) -> Self {
        Self::with_rule(mesh, components, CoefficientRule::Standard)
    }

    pub fn with_rule(mesh: Arc<SimplicialMesh>, components: usize, rule: CoefficientRule) -> Self {
        assert!(components >= 1);
        let nv = mesh.num_vertices();
        let mut dof_of_vertex = vec![None; nv];
        let mut vertex_of_dof = Vec::new();
        for (v, slot) in dof_of_vertex.iter_mut().enumerate() {
            if !mesh.is_boundary(v) {
                *slot = Some(vertex_of_dof.len());
                vertex_of_dof.push(v);
            }
        }
        let grads = barycentric_gradients(&mesh);
        let full_mass = assembly::full_scalar_mass(&mesh);
        let mut space = Self {
            mesh,
            components,
            dof_of_vertex,
            vertex_of_dof,
            grads,
            full_mass,
            mass: CsrMatrix::zeros(0),
            lumped: Vec::new(),
            rule,
            id: NEXT_SPACE_ID.fetch_add(1, Ordering::Relaxed),
        };
        space.mass = assembly::interior_mass(&space);
        space.lumped = assembly::lumped_weights(&space);
        space
    }

    pub fn mesh(&self) -> &Arc<SimplicialMesh> {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Number of interior nodes.
    pub fn num_nodes(&self) -> usize {
        self.vertex_of_dof.len()
    }

    /// Number of scalar unknowns, `nodes * m`.
    pub fn num_dofs(&self) -> usize {
        self.vertex_of_dof.len() * self.components
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn rule(&self) -> CoefficientRule {
        self.rule
    }

    pub fn h(&self) -> f64 {
        self.mesh.h()
    }

    pub fn dof_of_vertex(&self, v: usize) -> Option<usize> {
        self.dof_of_vertex[v]
    }

    pub fn vertex_of_node(&self, i: usize) -> usize {
        self.vertex_of_dof[i]
    }

    pub(crate) fn cell_grads(&self, c: usize) -> &[f64] {
        let d = self.dim();
        &self.grads[c * (d + 1) * d..(c + 1) * (d + 1) * d]
    }

    pub(crate) fn full_mass(&self) -> &CsrMatrix {
        &self.full_mass
    }

    /// Consistent mass on the interior dofs.
    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    /// Lumped weights, one per interior node.
    pub fn lumped(&self) -> &[f64] {
        &self.lumped
    }

    /// Stiffness of the unit tensor `delta_ab delta_ij`.
    pub fn unit_stiffness(&self) -> CsrMatrix {
        assemble_stiffness(self, &IsotropicTensor::identity(self.components, self.dim()), 0.0)
    }

    pub fn zeros(&self, time: Option<f64>) -> NodalField {
        NodalField { values: vec![0.0; self.num_dofs()], components: self.components, space_id: self.id, time }
    }

    pub fn field(&self, values: Vec<f64>, time: Option<f64>) -> Result<NodalField> {
        if values.len() != self.num_dofs() {
            return Err(invalid(format!("field has {} entries, space has {} dofs", values.len(), self.num_dofs())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("field entries must be finite"));
        }
        Ok(NodalField { values, components: self.components, space_id: self.id, time })
    }

    pub fn check(&self, field: &NodalField) -> Result<()> {
        if field.space_id != self.id || field.values.len() != self.num_dofs() {
            Err(Error::SpaceMismatch)
        } else {
            Ok(())
        }
    }

    /// Nodal interpolant at the interior vertices of `g(x, out)`.
    pub fn interpolate(&self, g: impl Fn(&[f64], &mut [f64]), time: Option<f64>) -> NodalField {
        let m = self.components;
        let mut values = vec![0.0; self.num_dofs()];
        for (i, &v) in self.vertex_of_dof.iter().enumerate() {
            g(self.mesh.vertex(v), &mut values[i * m..(i + 1) * m]);
        }
        NodalField { values, components: m, space_id: self.id, time }
    }

    /// Values at every mesh vertex (zero on the boundary), `m` per vertex.
    pub fn extend(&self, values: &[f64]) -> Vec<f64> {
        let m = self.components;
        let mut full = vec![0.0; self.mesh.num_vertices() * m];
        for (i, &v) in self.vertex_of_dof.iter().enumerate() {
            full[v * m..(v + 1) * m].copy_from_slice(&values[i * m..(i + 1) * m]);
        }
        full
    }

    /// Cellwise constant Jacobian, row-major `m x d`.
    pub fn cell_gradient(&self, values: &[f64], c: usize, out: &mut [f64]) {
        let (d, m) = (self.dim(), self.components);
        out.iter_mut().for_each(|v| *v = 0.0);
        let g = self.cell_grads(c);
        for (k, &v) in self.mesh.cell(c).iter().enumerate() {
            if let Some(i) = self.dof_of_vertex[v] {
                for a in 0..m {
                    let u = values[i * m + a];
                    for j in 0..d {
                        out[a * d + j] += u * g[k * d + j];
                    }
                }
            }
        }
    }

    /// Value of the field at barycentric point `lambda` of cell `c`.
    pub fn cell_value(&self, values: &[f64], c: usize, lambda: &[f64], out: &mut [f64]) {
        let m = self.components;
        out.iter_mut().for_each(|v| *v = 0.0);
        for (k, &v) in self.mesh.cell(c).iter().enumerate() {
            if let Some(i) = self.dof_of_vertex[v] {
                for a in 0..m {
                    out[a] += lambda[k] * values[i * m + a];
                }
            }
        }
    }

    /// Point evaluation of value and Jacobian; `false` outside the domain.
    pub fn evaluate(&self, values: &[f64], x: &[f64], value: &mut [f64], gradient: &mut [f64]) -> bool {
        match self.mesh.locate(x) {
            Some((c, lambda)) => {
                self.cell_value(values, c, &lambda, value);
                self.cell_gradient(values, c, gradient);
                true
            }
            None => false,
        }
    }

    /// Interpolates a field of `coarse` at the vertices of this space. Exact for nested
    /// refinements.
    pub fn prolong(&self, coarse: &FemSpace, field: &NodalField) -> Result<NodalField> {
        coarse.check(field)?;
        if coarse.components != self.components || coarse.dim() != self.dim() {
            return Err(Error::SpaceMismatch);
        }
        let m = self.components;
        let mut values = vec![0.0; self.num_dofs()];
        for (i, &v) in self.vertex_of_dof.iter().enumerate() {
            let (c, lambda) = coarse.mesh.locate(self.mesh.vertex(v)).ok_or(Error::SpaceMismatch)?;
            coarse.cell_value(&field.values, c, &lambda, &mut values[i * m..(i + 1) * m]);
        }
        Ok(NodalField { values, components: m, space_id: self.id, time: field.time })
    }
}

fn barycentric_gradients(mesh: &SimplicialMesh) -> Vec<f64> {
    let d = mesh.dim();
    let mut grads = Vec::with_capacity(mesh.num_cells() * (d + 1) * d);
    for c in 0..mesh.num_cells() {
        let v = mesh.cell(c);
        if d == 1 {
            let len = mesh.vertex(v[1])[0] - mesh.vertex(v[0])[0];
            grads.extend_from_slice(&[-1.0 / len, 1.0 / len]);
        } else {
            let (p0, p1, p2) = (mesh.vertex(v[0]), mesh.vertex(v[1]), mesh.vertex(v[2]));
            let (a, b) = (p1[0] - p0[0], p2[0] - p0[0]);
            let (cc, dd) = (p1[1] - p0[1], p2[1] - p0[1]);
            let det = a * dd - b * cc;
            // rows of the inverse Jacobian are the gradients of lambda_1 and lambda_2
            let g1 = [dd / det, -b / det];
            let g2 = [-cc / det, a / det];
            grads.extend_from_slice(&[-g1[0] - g2[0], -g1[1] - g2[1], g1[0], g1[1], g2[0], g2[1]]);
        }
    }
    grads
}
