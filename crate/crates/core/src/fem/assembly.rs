use crate::fem::FemSpace;
use crate::linalg::CsrMatrix;
use crate::mesh::SimplicialMesh;
use crate::model::{tensor_index, EllipticTensor, ForceField};
use crate::quadrature::SimplexRule;

/// Stiffness `K[(a, alpha), (b, beta)] = sum_K |K| Abar^{alpha beta}_{ij} d_i phi_a d_j phi_b`,
/// with `Abar` the cell average of `A(t, .)` under the space's coefficient rule. Only the
/// upper triangle of each element matrix is computed and mirrored, so `K` is exactly
/// symmetric.
pub fn assemble_stiffness(space: &FemSpace, tensor: &dyn EllipticTensor, t: f64) -> CsrMatrix {
    let mesh = space.mesh();
    let (d, m) = (space.dim(), space.components());
    let mut avg = TensorAverager::new(space);
    let mut triplets = Vec::with_capacity(mesh.num_cells() * ((d + 1) * m).pow(2));
    let mut local: Vec<(usize, usize, usize)> = Vec::with_capacity((d + 1) * m);
    for c in 0..mesh.num_cells() {
        let abar = avg.cell(space, tensor, t, c);
        let vol = mesh.volume(c);
        let g = space.cell_grads(c);
        local.clear();
        for (k, &v) in mesh.cell(c).iter().enumerate() {
            if let Some(i) = space.dof_of_vertex(v) {
                for alpha in 0..m {
                    local.push((k, alpha, i * m + alpha));
                }
            }
        }
        for p in 0..local.len() {
            let (ka, alpha, row) = local[p];
            for &(kb, beta, col) in &local[p..] {
                let mut s = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        s += abar[tensor_index(m, d, alpha, i, beta, j)] * g[ka * d + i] * g[kb * d + j];
                    }
                }
                let val = vol * s;
                triplets.push((row, col, val));
                if row != col {
                    triplets.push((col, row, val));
                }
            }
        }
    }
    CsrMatrix::from_triplets(space.num_dofs(), triplets)
}

/// Cell averages of `A(t, .)` under the space's coefficient rule.
pub(crate) struct TensorAverager {
    rule: SimplexRule,
    abar: Vec<f64>,
    aq: Vec<f64>,
    x: Vec<f64>,
}

impl TensorAverager {
    pub(crate) fn new(space: &FemSpace) -> Self {
        let (d, m) = (space.dim(), space.components());
        let md = m * d;
        Self {
            rule: SimplexRule::coefficient(d, space.rule()),
            abar: vec![0.0; md * md],
            aq: vec![0.0; md * md],
            x: vec![0.0; d],
        }
    }

    pub(crate) fn cell(&mut self, space: &FemSpace, tensor: &dyn EllipticTensor, t: f64, c: usize) -> &[f64] {
        self.abar.iter_mut().for_each(|v| *v = 0.0);
        for (lambda, w) in self.rule.points.iter().zip(&self.rule.weights) {
            space.mesh().map_point(c, lambda, &mut self.x);
            tensor.evaluate(t, &self.x, &mut self.aq);
            for (a, q) in self.abar.iter_mut().zip(&self.aq) {
                *a += w * q;
            }
        }
        &self.abar
    }
}

/// Consistent mass over all vertices of a scalar P1 space.
pub(crate) fn full_scalar_mass(mesh: &SimplicialMesh) -> CsrMatrix {
    let d = mesh.dim();
    let mut triplets = Vec::with_capacity(mesh.num_cells() * (d + 1) * (d + 1));
    let denom = if d == 1 { 6.0 } else { 12.0 };
    for c in 0..mesh.num_cells() {
        let vol = mesh.volume(c);
        let v = mesh.cell(c);
        for a in 0..=d {
            for b in 0..=d {
                let factor = if a == b { 2.0 } else { 1.0 };
                triplets.push((v[a], v[b], vol * factor / denom));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.num_vertices(), triplets)
}

pub(crate) fn interior_mass(space: &FemSpace) -> CsrMatrix {
    let m = space.components();
    let full = space.full_mass();
    let mut triplets = Vec::new();
    for i in 0..space.num_nodes() {
        for (vj, val) in full.row(space.vertex_of_node(i)) {
            if let Some(j) = space.dof_of_vertex(vj) {
                for a in 0..m {
                    triplets.push((i * m + a, j * m + a, val));
                }
            }
        }
    }
    CsrMatrix::from_triplets(space.num_dofs(), triplets)
}

/// Row sums of the full mass over interior rows.
pub(crate) fn lumped_weights(space: &FemSpace) -> Vec<f64> {
    let full = space.full_mass();
    (0..space.num_nodes()).map(|i| full.row(space.vertex_of_node(i)).map(|(_, v)| v).sum()).collect()
}

/// Consistent mass on the interior dofs.
pub fn assemble_mass(space: &FemSpace) -> CsrMatrix {
    space.mass().clone()
}

/// Lumped mass weights, one per interior node.
pub fn lumped_mass(space: &FemSpace) -> Vec<f64> {
    space.lumped().to_vec()
}

/// `b = M I_h f(t)`: consistent mass applied to the nodal interpolant of `f(t, .)` over all
/// vertices, restricted to interior rows.
pub fn assemble_load(space: &FemSpace, force: &dyn ForceField, t: f64) -> Vec<f64> {
    let mesh = space.mesh();
    let m = space.components();
    let mut fv = vec![0.0; mesh.num_vertices() * m];
    for v in 0..mesh.num_vertices() {
        force.evaluate(t, mesh.vertex(v), &mut fv[v * m..(v + 1) * m]);
    }
    let full = space.full_mass();
    let mut b = vec![0.0; space.num_dofs()];
    for i in 0..space.num_nodes() {
        for (vj, val) in full.row(space.vertex_of_node(i)) {
            for a in 0..m {
                b[i * m + a] += val * fv[vj * m + a];
            }
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::h1_semi;
    use crate::mesh::{unit_interval, unit_square};
    use crate::model::{DiagonalTensor, IsotropicTensor, Profile, RampForce};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn one_dof_interval() {
        let s = FemSpace::new(Arc::new(unit_interval(2)), 1);
        let k = assemble_stiffness(&s, &IsotropicTensor::identity(1, 1), 0.0);
        assert_eq!(k.dim(), 1);
        assert!((k.get(0, 0) - 4.0).abs() < 1e-14);
        assert!((lumped_mass(&s)[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mass_partitions_unity() {
        for mesh in [unit_interval(7), unit_square(5)] {
            let s = FemSpace::new(Arc::new(mesh), 1);
            let full = s.full_mass();
            let ones = vec![1.0; full.dim()];
            assert!((full.bilinear(&ones, &ones) - 1.0).abs() < 1e-13);
            assert!(s.lumped().iter().all(|&w| w > 0.0));
            let interior: f64 = s.lumped().iter().sum();
            assert!(interior < 1.0);
        }
    }

    #[test]
    fn stiffness_is_symmetric_and_elliptic() {
        let s = FemSpace::new(Arc::new(unit_square(8)), 2);
        let unit = s.unit_stiffness();
        assert!(unit.is_symmetric());
        let aniso = DiagonalTensor { coefficients: vec![1.0, 3.0], variation: 0.5, components: 2 };
        let k = assemble_stiffness(&s, &aniso, 0.3);
        assert!(k.is_symmetric());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let v: Vec<f64> = (0..s.num_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let semi = h1_semi(&s, &v).powi(2);
            assert!((unit.bilinear(&v, &v) - semi).abs() <= 1e-12 * semi);
            assert!(k.bilinear(&v, &v) >= aniso_kappa(&aniso) * semi * (1.0 - 1e-12));
        }
    }

    fn aniso_kappa(a: &DiagonalTensor) -> f64 {
        use crate::model::EllipticTensor;
        a.ellipticity()
    }

    #[test]
    fn uniform_load_matches_lumped_weights() {
        let s = FemSpace::new(Arc::new(unit_square(6)), 1);
        let f = RampForce { slope: 1.0, profile: Profile::Uniform, direction: vec![1.0] };
        let b = assemble_load(&s, &f, 2.0);
        for (bi, wi) in b.iter().zip(s.lumped()) {
            assert!((bi - 2.0 * wi).abs() < 1e-15);
        }
    }
}
