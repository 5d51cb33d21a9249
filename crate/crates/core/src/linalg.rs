//! Sparse storage and the iterative kernels shared by assembly, projection and the
//! increment solver.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Compressed sparse row matrix. Assembled operators in this crate are symmetric, but the
/// storage keeps the full pattern so that products need no transposition.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        // stable sort keeps the summation order of duplicates deterministic
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r},{c}) outside {dim}x{dim}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { dim, row_ptr, col_idx, values }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, row_ptr: vec![0; dim + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_triplets(dim, (0..dim).map(|i| (i, i, 1.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `x · A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// Max absolute row sum; an upper bound on the spectral radius.
    pub fn gershgorin_bound(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    /// Coordinate-triplet text dump, one `row col value` line per stored entry.
    pub fn to_triplet_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "% {} {} {}", self.dim, self.dim, self.nnz());
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                let _ = writeln!(out, "{i} {j} {v:.17e}");
            }
        }
        out
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Settings for [`conjugate_gradient`].
#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    pub rel_tol: f64,
    /// Iteration cap as a multiple of the system dimension.
    pub max_iter_factor: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-12, max_iter_factor: 20 }
    }
}

/// Jacobi-preconditioned conjugate gradients for SPD `a`.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, opts: CgOptions) -> Result<Vec<f64>> {
    let n = a.dim();
    let mut x = x0.map_or_else(|| vec![0.0; n], |v| v.to_vec());
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let ax = a.mul_vec(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, d)| ri * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let max_iter = (opts.max_iter_factor * n).max(10);
    let mut res = norm2(&r) / b_norm;
    for _ in 0..max_iter {
        if res <= opts.rel_tol {
            return Ok(x);
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = norm2(&r) / b_norm;
    }
    if res <= opts.rel_tol {
        Ok(x)
    } else {
        Err(Error::LinearSolveFailure { iterations: max_iter, residual: res })
    }
}

/// Largest eigenvalue estimate of a symmetric PSD matrix by `steps` power iterations
/// from a fixed deterministic start vector. Returns the final Rayleigh quotient.
pub fn power_iteration(a: &CsrMatrix, steps: usize) -> f64 {
    let n = a.dim();
    if n == 0 || a.nnz() == 0 {
        return 0.0;
    }
    // deterministic start with energy in every mode
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_749).fract()).collect();
    let mut lambda = 0.0;
    for _ in 0..steps {
        let nx = norm2(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let y = a.mul_vec(&x);
        lambda = dot(&x, &y);
        x = y;
    }
    lambda
}

/// Smallest eigenpair of the SPD pencil `k v = lambda m v` by inverse iteration with
/// zero shift. Stops once the Rayleigh quotient changes by less than `tol` (relative).
pub fn inverse_iteration(k: &CsrMatrix, m: &CsrMatrix, tol: f64, max_iter: usize) -> Result<(f64, Vec<f64>)> {
    let n = k.dim();
    if n == 0 {
        return Err(Error::InvalidInput("empty pencil".into()));
    }
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7 % 13) as f64 / 13.0)).collect();
    let mut lambda = f64::INFINITY;
    let mut change = f64::INFINITY;
    let cg = CgOptions::default();
    for _ in 0..max_iter {
        let mv = m.mul_vec(&v);
        let w = conjugate_gradient(k, &mv, Some(&v), cg)?;
        let mw = m.mul_vec(&w);
        let m_norm = dot(&w, &mw).sqrt();
        v = w.iter().map(|x| x / m_norm).collect();
        let new_lambda = k.bilinear(&v, &v);
        change = ((new_lambda - lambda) / new_lambda).abs();
        lambda = new_lambda;
        if change <= tol {
            return Ok((lambda, v));
        }
    }
    Err(Error::EigenSolveFailure { iterations: max_iter, last_change: change })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn triplets_are_summed() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 0, 4.0), (0, 1, 4.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.nnz(), 3);
        assert!(a.is_symmetric());
        assert!(a.to_triplet_text().starts_with("% 2 2 3"));
    }

    #[test]
    fn cg_solves_tridiagonal() {
        let a = laplace_1d(50);
        let x_true: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&x_true);
        let x = conjugate_gradient(&a, &b, None, CgOptions::default()).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn cg_reports_budget_exhaustion() {
        let a = laplace_1d(200);
        let b = vec![1.0; 200];
        let err = conjugate_gradient(&a, &b, None, CgOptions { rel_tol: 1e-14, max_iter_factor: 0 }).unwrap_err();
        assert!(matches!(err, Error::LinearSolveFailure { .. }));
    }

    #[test]
    fn spectral_bounds_for_laplacian() {
        let n = 40;
        let a = laplace_1d(n);
        let exact_max = 2.0 - 2.0 * (std::f64::consts::PI * n as f64 / (n as f64 + 1.0)).cos();
        let est = power_iteration(&a, 50);
        assert!(est <= exact_max + 1e-12 && est > 0.97 * exact_max);
        assert!(a.gershgorin_bound() >= exact_max);
        let (lmin, _) = inverse_iteration(&a, &CsrMatrix::identity(n), 1e-12, 500).unwrap();
        let exact_min = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((lmin - exact_min).abs() < 1e-9);
    }
}
