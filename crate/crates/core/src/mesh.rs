//! Structured simplicial meshes of the unit interval and unit square.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::fem::FemSpace;
use crate::linalg::inverse_iteration;

#[derive(Debug, Clone)]
pub struct SimplicialMesh {
    dim: usize,
    /// Flat coordinates, `dim` per vertex.
    coords: Vec<f64>,
    /// Flat cells, `dim + 1` vertex indices each.
    cells: Vec<usize>,
    boundary: Vec<bool>,
    volumes: Vec<f64>,
    diameters: Vec<f64>,
    locator: PointLocator,
}

#[derive(Serialize)]
struct MeshDocument<'a> {
    vertices: Vec<&'a [f64]>,
    cells: Vec<&'a [usize]>,
    boundary: &'a [bool],
}

/// Uniform segment mesh of `[0, 1]` with `n` cells.
pub fn unit_interval(n: usize) -> SimplicialMesh {
    assert!(n >= 2, "unit_interval needs n >= 2");
    let coords: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let cells: Vec<usize> = (0..n).flat_map(|i| [i, i + 1]).collect();
    let mut boundary = vec![false; n + 1];
    boundary[0] = true;
    boundary[n] = true;
    SimplicialMesh::from_parts(1, coords, cells, boundary)
}

/// Unit square split into `n^2` squares, each cut along the diagonal from `(x, y)` to
/// `(x + 1/n, y + 1/n)`.
pub fn unit_square(n: usize) -> SimplicialMesh {
    assert!(n >= 2, "unit_square needs n >= 2");
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut coords = Vec::with_capacity(2 * (n + 1) * (n + 1));
    let mut boundary = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            coords.push(i as f64 / n as f64);
            coords.push(j as f64 / n as f64);
            boundary.push(i == 0 || j == 0 || i == n || j == n);
        }
    }
    let mut cells = Vec::with_capacity(6 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            cells.extend_from_slice(&[a, b, c, a, c, d]);
        }
    }
    SimplicialMesh::from_parts(2, coords, cells, boundary)
}

impl SimplicialMesh {
    fn from_parts(dim: usize, coords: Vec<f64>, cells: Vec<usize>, boundary: Vec<bool>) -> Self {
        let nc = cells.len() / (dim + 1);
        let mut volumes = Vec::with_capacity(nc);
        let mut diameters = Vec::with_capacity(nc);
        for c in 0..nc {
            let v = &cells[c * (dim + 1)..(c + 1) * (dim + 1)];
            let p = |k: usize| &coords[v[k] * dim..(v[k] + 1) * dim];
            match dim {
                1 => {
                    let len = (p(1)[0] - p(0)[0]).abs();
                    volumes.push(len);
                    diameters.push(len);
                }
                _ => {
                    let (a, b, q) = (p(0), p(1), p(2));
                    let area = 0.5 * ((b[0] - a[0]) * (q[1] - a[1]) - (q[0] - a[0]) * (b[1] - a[1])).abs();
                    let e = |u: &[f64], w: &[f64]| ((u[0] - w[0]).powi(2) + (u[1] - w[1]).powi(2)).sqrt();
                    volumes.push(area);
                    diameters.push(e(a, b).max(e(b, q)).max(e(q, a)));
                }
            }
        }
        let locator = PointLocator::build(dim, &coords, &cells);
        Self { dim, coords, cells, boundary, volumes, diameters, locator }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.boundary.len()
    }

    pub fn num_cells(&self) -> usize {
        self.volumes.len()
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c * (self.dim + 1)..(c + 1) * (self.dim + 1)]
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn volume(&self, c: usize) -> f64 {
        self.volumes[c]
    }

    /// Largest cell diameter.
    pub fn h(&self) -> f64 {
        self.diameters.iter().cloned().fold(0.0, f64::max)
    }

    /// `max h_K / min h_K`.
    pub fn quasiuniformity(&self) -> f64 {
        let min = self.diameters.iter().cloned().fold(f64::INFINITY, f64::min);
        self.h() / min
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    /// Uniform refinement: bisection in 1D, red refinement in 2D. Existing vertices keep
    /// their indices.
    pub fn refine(&self) -> SimplicialMesh {
        let dim = self.dim;
        let mut coords = self.coords.clone();
        let mut boundary = self.boundary.clone();
        let mut edge_cells: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let key = |a: usize, b: usize| (a.min(b), a.max(b));
        for c in 0..self.num_cells() {
            let v = self.cell(c);
            for a in 0..=dim {
                for b in (a + 1)..=dim {
                    *edge_cells.entry(key(v[a], v[b])).or_insert(0) += 1;
                }
            }
        }
        let mut mid = |a: usize, b: usize, coords: &mut Vec<f64>, boundary: &mut Vec<bool>| -> usize {
            let k = key(a, b);
            if let Some(&m) = midpoint.get(&k) {
                return m;
            }
            let id = boundary.len();
            for i in 0..dim {
                let x = 0.5 * (coords[a * dim + i] + coords[b * dim + i]);
                coords.push(x);
            }
            // an edge on the boundary belongs to exactly one cell in 2D
            boundary.push(dim == 2 && edge_cells[&k] == 1);
            midpoint.insert(k, id);
            id
        };
        let mut cells = Vec::with_capacity(self.cells.len() * (1 << dim));
        for c in 0..self.num_cells() {
            let v = self.cell(c).to_vec();
            if dim == 1 {
                let m = mid(v[0], v[1], &mut coords, &mut boundary);
                cells.extend_from_slice(&[v[0], m, m, v[1]]);
            } else {
                let (a, b, q) = (v[0], v[1], v[2]);
                let ab = mid(a, b, &mut coords, &mut boundary);
                let bq = mid(b, q, &mut coords, &mut boundary);
                let qa = mid(q, a, &mut coords, &mut boundary);
                cells.extend_from_slice(&[a, ab, qa, ab, b, bq, qa, bq, q, ab, bq, qa]);
            }
        }
        SimplicialMesh::from_parts(dim, coords, cells, boundary)
    }

    /// Cell containing `x` and the barycentric coordinates of `x` in it. Points within
    /// `1e-10` outside the domain are clamped.
    pub fn locate(&self, x: &[f64]) -> Option<(usize, Vec<f64>)> {
        self.locator.locate(self, x)
    }

    pub fn barycentric(&self, c: usize, x: &[f64]) -> Vec<f64> {
        let v = self.cell(c);
        match self.dim {
            1 => {
                let (a, b) = (self.vertex(v[0])[0], self.vertex(v[1])[0]);
                let s = (x[0] - a) / (b - a);
                vec![1.0 - s, s]
            }
            _ => {
                let (p0, p1, p2) = (self.vertex(v[0]), self.vertex(v[1]), self.vertex(v[2]));
                let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
                let l1 = ((x[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (x[1] - p0[1])) / det;
                let l2 = ((p1[0] - p0[0]) * (x[1] - p0[1]) - (x[0] - p0[0]) * (p1[1] - p0[1])) / det;
                vec![1.0 - l1 - l2, l1, l2]
            }
        }
    }

    /// Physical point with barycentric coordinates `lambda` in cell `c`.
    pub fn map_point(&self, c: usize, lambda: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (k, &vi) in self.cell(c).iter().enumerate() {
            for (o, p) in out.iter_mut().zip(self.vertex(vi)) {
                *o += lambda[k] * p;
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = MeshDocument {
            vertices: (0..self.num_vertices()).map(|i| self.vertex(i)).collect(),
            cells: (0..self.num_cells()).map(|c| self.cell(c)).collect(),
            boundary: &self.boundary,
        };
        Ok(serde_json::to_string(&doc)?)
    }
}

/// Uniform bucket grid over `[0, 1]^d` holding the cells whose bounding box meets each bucket.
#[derive(Debug, Clone)]
struct PointLocator {
    per_axis: usize,
    buckets: Vec<Vec<usize>>,
}

impl PointLocator {
    fn build(dim: usize, coords: &[f64], cells: &[usize]) -> Self {
        let nc = cells.len() / (dim + 1);
        let per_axis = match dim {
            1 => nc.max(1),
            _ => ((nc as f64 / 2.0).sqrt().ceil() as usize).max(1),
        };
        let nb = per_axis.pow(dim as u32);
        let mut buckets = vec![Vec::new(); nb];
        let bucket_of = |x: f64| ((x * per_axis as f64).floor().max(0.0) as usize).min(per_axis - 1);
        for c in 0..nc {
            let v = &cells[c * (dim + 1)..(c + 1) * (dim + 1)];
            let mut lo = [usize::MAX; 2];
            let mut hi = [0usize; 2];
            for &vi in v {
                for i in 0..dim {
                    let x = coords[vi * dim + i];
                    // widen slightly so that points on bucket faces find their cells
                    lo[i] = lo[i].min(bucket_of(x - 1e-12));
                    hi[i] = hi[i].max(bucket_of(x + 1e-12));
                }
            }
            if dim == 1 {
                for b in lo[0]..=hi[0] {
                    buckets[b].push(c);
                }
            } else {
                for by in lo[1]..=hi[1] {
                    for bx in lo[0]..=hi[0] {
                        buckets[by * per_axis + bx].push(c);
                    }
                }
            }
        }
        Self { per_axis, buckets }
    }

    fn locate(&self, mesh: &SimplicialMesh, x: &[f64]) -> Option<(usize, Vec<f64>)> {
        let dim = mesh.dim;
        if x.iter().any(|&xi| !(-1e-10..=1.0 + 1e-10).contains(&xi)) {
            return None;
        }
        let xc: Vec<f64> = x.iter().map(|&xi| xi.clamp(0.0, 1.0)).collect();
        let b = |xi: f64| ((xi * self.per_axis as f64).floor() as usize).min(self.per_axis - 1);
        let bucket = if dim == 1 { b(xc[0]) } else { b(xc[1]) * self.per_axis + b(xc[0]) };
        let mut best: Option<(usize, Vec<f64>, f64)> = None;
        for &c in &self.buckets[bucket] {
            let lambda = mesh.barycentric(c, &xc);
            let worst = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
            if worst >= -1e-12 {
                return Some((c, lambda));
            }
            if best.as_ref().is_none_or(|(_, _, w)| worst > *w) {
                best = Some((c, lambda, worst));
            }
        }
        best.filter(|(_, _, w)| *w >= -1e-9).map(|(c, l, _)| (c, l))
    }
}

/// `1 / sqrt(lambda_min)` for the smallest eigenvalue of the scalar unit-tensor stiffness
/// against the consistent mass on the interior dofs.
pub fn poincare_constant(space: &FemSpace) -> Result<f64> {
    let scalar = FemSpace::new(space.mesh().clone(), 1);
    if scalar.num_nodes() == 0 {
        return Err(invalid("mesh has no interior vertices"));
    }
    let k = scalar.unit_stiffness();
    let m = scalar.mass();
    let (lambda, _) = inverse_iteration(&k, m, 1e-10, 10_000)?;
    Ok(1.0 / lambda.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, SQRT_2};
    use std::sync::Arc;

    #[test]
    fn interval_counts() {
        let m = unit_interval(4);
        assert_eq!(m.num_vertices(), 5);
        assert_eq!(m.num_cells(), 4);
        assert_eq!(m.h(), 0.25);
        let m2 = unit_interval(2);
        let flagged: Vec<usize> = (0..3).filter(|&i| m2.is_boundary(i)).collect();
        assert_eq!(flagged, vec![0, 2]);
    }

    #[test]
    fn square_counts() {
        let m = unit_square(2);
        assert_eq!(m.num_vertices(), 9);
        assert_eq!(m.num_cells(), 8);
        assert!((m.h() - SQRT_2 / 2.0).abs() < 1e-15);
        assert_eq!(m.quasiuniformity(), 1.0);
        assert!((m.total_volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn refinement_halves_h_and_keeps_shape() {
        let m = unit_square(2);
        let r = m.refine();
        assert_eq!(r.num_vertices(), 25);
        assert_eq!(r.num_cells(), 32);
        assert!((r.h() - m.h() / 2.0).abs() < 1e-15);
        assert!((r.quasiuniformity() - 1.0).abs() < 1e-12);
        assert!((r.total_volume() - 1.0).abs() < 1e-12);
        for i in 0..m.num_vertices() {
            assert_eq!(m.vertex(i), r.vertex(i));
        }
        for i in 0..r.num_vertices() {
            let p = r.vertex(i);
            let on = p.iter().any(|&x| x == 0.0 || x == 1.0);
            assert_eq!(on, r.is_boundary(i), "vertex {p:?}");
        }
        let i = unit_interval(4).refine();
        assert_eq!(i.num_vertices(), 9);
        assert_eq!(i.h(), 0.125);
        assert_eq!(i.boundary_flags().iter().filter(|&&b| b).count(), 2);
    }

    #[test]
    fn locate_points() {
        let m = unit_square(8).refine();
        for &x in &[[0.0, 0.0], [1.0, 1.0], [0.3, 0.71], [0.5, 0.5], [0.999, 0.001]] {
            let (c, l) = m.locate(&x).unwrap();
            let mut y = [0.0; 2];
            m.map_point(c, &l, &mut y);
            assert!((y[0] - x[0]).abs() < 1e-12 && (y[1] - x[1]).abs() < 1e-12);
        }
        assert!(m.locate(&[1.5, 0.2]).is_none());
        let i = unit_interval(16);
        let (c, l) = i.locate(&[0.52]).unwrap();
        assert_eq!(c, 8);
        assert!((l[1] - 0.32).abs() < 1e-12);
    }

    #[test]
    fn json_export() {
        let text = unit_interval(2).to_json().unwrap();
        assert_eq!(text, r#"{"vertices":[[0.0],[0.5],[1.0]],"cells":[[0,1],[1,2]],"boundary":[true,false,true]}"#);
    }

    #[test]
    fn poincare_constants() {
        let cp = poincare_constant(&FemSpace::new(Arc::new(unit_interval(256)), 1)).unwrap();
        assert!((cp - 1.0 / PI).abs() < 1e-4);
        let coarse = poincare_constant(&FemSpace::new(Arc::new(unit_interval(8)), 1)).unwrap();
        assert!((coarse - 1.0 / PI).abs() < 0.1 / PI);
        // conforming spaces: Rayleigh quotients decrease, constants increase
        let mut last = 0.0;
        let mut mesh = unit_interval(4);
        for _ in 0..4 {
            let c = poincare_constant(&FemSpace::new(Arc::new(mesh.clone()), 1)).unwrap();
            assert!(c > last && c < 1.0 / PI);
            last = c;
            mesh = mesh.refine();
        }
    }
}
