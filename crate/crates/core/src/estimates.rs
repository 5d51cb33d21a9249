//! Measured counterparts of the a-priori estimates, evaluated on trajectories and refinement
//! families. Constants are never estimated; checks look at boundedness trends across levels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fem::{assemble_stiffness, gradient_lp, l2, lp, FemSpace};
use crate::increment::StepOptions;
use crate::linalg::{conjugate_gradient, inverse_iteration, CgOptions, CsrMatrix};
use crate::mesh::poincare_constant;
use crate::model::{euclid, EllipticTensor, ForceField, ProblemSpec};
use crate::quadrature::SimplexRule;
use crate::rothe::{run, run_perturbed, w12_norm, Trajectory};

/// `max / min` of nonnegative values; 1 when all vanish, infinite when only some do.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(0.0, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        1.0
    } else if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Largest relative increase between consecutive levels, `max_i v[i+1] / v[i] - 1`.
pub fn growth_per_level(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] - 1.0 } else if w[1] > 0.0 { f64::INFINITY } else { 0.0 })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `||f(t, .)||_{L^2}` by a Gauss rule of order 4 per cell.
pub fn force_l2(space: &FemSpace, force: &dyn ForceField, t: f64) -> f64 {
    let mesh = space.mesh();
    let rule = SimplexRule::gauss(space.dim(), 4);
    let mut x = vec![0.0; space.dim()];
    let mut f = vec![0.0; force.components()];
    let mut acc = 0.0;
    for c in 0..mesh.num_cells() {
        let vol = mesh.volume(c);
        for (lambda, w) in rule.points.iter().zip(&rule.weights) {
            mesh.map_point(c, lambda, &mut x);
            force.evaluate(t, &x, &mut f);
            acc += vol * w * f.iter().map(|v| v * v).sum::<f64>();
        }
    }
    acc.sqrt()
}

fn check_traj(traj: &Trajectory, space: &FemSpace) -> Result<()> {
    if traj.space_id != space.id() {
        return Err(Error::SpaceMismatch);
    }
    Ok(())
}

/// Ratios `(||u_k||_q^q + ||grad u_k||^2) / (1 + ||f(t_k)||^2)` for `k = 0..=N`, with `q` the
/// growth exponent of `W0` (2, 4 or 6).
pub fn verify_coercivity(traj: &Trajectory, space: &FemSpace, spec: &ProblemSpec) -> Result<Vec<f64>> {
    check_traj(traj, space)?;
    let q = spec.energy.growth_exponent();
    traj.states
        .iter()
        .zip(&traj.times)
        .map(|(u, &t)| {
            let lq = lp(space, &u.values, q)?.powf(q);
            let grad = crate::fem::h1_semi(space, &u.values).powi(2);
            let f = force_l2(space, spec.force.as_ref(), t);
            Ok((lq + grad) / (1.0 + f * f))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeDerivativeBound {
    /// `max_k ||grad delta_k||_{L^2}`.
    pub max_gradient: f64,
    /// `[1 + avg ||f'||_{L^2} + max ||f||_{L^2}] / (kappa - mu C_P^2)`, with the unknown
    /// constant set to 1.
    pub bound_coefficient: f64,
    pub ratio: f64,
}

/// Largest gradient norm of the difference quotients and the data-dependent bound factor.
pub fn verify_time_derivative_bound(traj: &Trajectory, space: &FemSpace, spec: &ProblemSpec) -> Result<TimeDerivativeBound> {
    check_traj(traj, space)?;
    let cp = match spec.poincare_constant {
        Some(cp) => cp,
        None => poincare_constant(space)?,
    };
    let margin = spec.tensor.ellipticity() - spec.energy.monotonicity_modulus() * cp * cp;
    if margin <= 0.0 {
        return Err(Error::Inadmissible {
            product: spec.energy.monotonicity_modulus() * cp * cp,
            kappa: spec.tensor.ellipticity(),
            margin,
        });
    }
    let n = traj.num_steps();
    let max_gradient = (1..=n)
        .map(|k| crate::fem::h1_semi(space, &traj.difference_quotient(k)))
        .fold(0.0, f64::max);
    let force = spec.force.as_ref();
    let values: Vec<f64> = traj.times.iter().map(|&t| force_l2(space, force, t)).collect();
    let f_sup = values.iter().cloned().fold(0.0, f64::max);
    let rate_avg = (1..=n)
        .map(|k| {
            let (ta, tb) = (traj.times[k - 1], traj.times[k]);
            force_rate_l2(space, force, ta, tb)
        })
        .sum::<f64>()
        / n as f64;
    let bound_coefficient = (1.0 + rate_avg + f_sup) / margin;
    Ok(TimeDerivativeBound { max_gradient, bound_coefficient, ratio: max_gradient / bound_coefficient })
}

/// `||(f(tb) - f(ta)) / (tb - ta)||_{L^2}`.
fn force_rate_l2(space: &FemSpace, force: &dyn ForceField, ta: f64, tb: f64) -> f64 {
    let mesh = space.mesh();
    let rule = SimplexRule::gauss(space.dim(), 4);
    let mut x = vec![0.0; space.dim()];
    let (mut fa, mut fb) = (vec![0.0; force.components()], vec![0.0; force.components()]);
    let mut acc = 0.0;
    for c in 0..mesh.num_cells() {
        for (lambda, w) in rule.points.iter().zip(&rule.weights) {
            mesh.map_point(c, lambda, &mut x);
            force.evaluate(ta, &x, &mut fa);
            force.evaluate(tb, &x, &mut fb);
            acc += mesh.volume(c) * w * fa.iter().zip(&fb).map(|(a, b)| (b - a).powi(2)).sum::<f64>();
        }
    }
    acc.sqrt() / (tb - ta)
}

/// `max_k ||L_k u_k||_{L^2}` against the two candidate powers of `||f||_{L^inf(L^2)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceTrend {
    pub max_norm: f64,
    pub force_sup: f64,
    /// `max_norm / (1 + force_sup^max(1, (q-1)/2))`.
    pub ratio_half: f64,
    /// `max_norm / (1 + force_sup^(q-1))`.
    pub ratio_full: f64,
}

/// Norms of the discrete elliptic operator (lumped mass) applied to the states.
pub fn verify_laplace_bound(traj: &Trajectory, space: &FemSpace, spec: &ProblemSpec) -> Result<LaplaceTrend> {
    check_traj(traj, space)?;
    let tensor = spec.tensor.as_ref();
    let fixed = tensor.is_time_independent().then(|| assemble_stiffness(space, tensor, 0.0));
    let mut max_norm: f64 = 0.0;
    let mut force_sup: f64 = 0.0;
    for (u, &t) in traj.states.iter().zip(&traj.times) {
        let owned;
        let k = match &fixed {
            Some(k) => k,
            None => {
                owned = assemble_stiffness(space, tensor, t);
                &owned
            }
        };
        max_norm = max_norm.max(l2(space, &apply_operator(space, k, &u.values)));
        force_sup = force_sup.max(force_l2(space, spec.force.as_ref(), t));
    }
    let q = spec.energy.growth_exponent();
    let half = (0.5 * (q - 1.0)).max(1.0);
    Ok(LaplaceTrend {
        max_norm,
        force_sup,
        ratio_half: max_norm / (1.0 + force_sup.powf(half)),
        ratio_full: max_norm / (1.0 + force_sup.powf(q - 1.0)),
    })
}

/// `-W^{-1} K z` with lumped weights `W`.
fn apply_operator(space: &FemSpace, k: &CsrMatrix, z: &[f64]) -> Vec<f64> {
    let m = space.components();
    let w = space.lumped();
    k.mul_vec(z).iter().enumerate().map(|(i, v)| -v / w[i / m]).collect()
}

/// Multiplies by the power of two that brings `|z|_inf` into `[1, 2)`; exact in floating point.
fn normalize_exponent(z: &[f64]) -> Vec<f64> {
    let top = z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if top == 0.0 || !top.is_normal() {
        return z.to_vec();
    }
    let exponent = ((top.to_bits() >> 52) & 0x7ff) as i64 - 1023;
    let factor = f64::from_bits(((1023 - exponent) as u64) << 52);
    z.iter().map(|v| v * factor).collect()
}

/// Discrete Sobolev quotient with the elliptic operator and its stiffness.
struct SobolevQuotient<'a> {
    space: &'a FemSpace,
    k: CsrMatrix,
}

impl<'a> SobolevQuotient<'a> {
    fn new(space: &'a FemSpace, tensor: &dyn EllipticTensor, t: f64) -> Self {
        Self { space, k: assemble_stiffness(space, tensor, t) }
    }

    fn ratio(&self, z: &[f64]) -> Result<f64> {
        let z = normalize_exponent(z);
        let den = l2(self.space, &apply_operator(self.space, &self.k, &z));
        if den == 0.0 {
            return Err(invalid("Sobolev quotient of the zero field"));
        }
        Ok(gradient_lp(self.space, &z, 6.0)? / den)
    }

    /// `z = K^{-1} W y`, so that `L z = -y`.
    fn green(&self, y: &[f64]) -> Result<Vec<f64>> {
        let m = self.space.components();
        let w = self.space.lumped();
        let rhs: Vec<f64> = y.iter().enumerate().map(|(i, v)| v * w[i / m]).collect();
        conjugate_gradient(&self.k, &rhs, None, CgOptions::default())
    }

    /// `d/dz ||grad z||_6^6` as a dof vector.
    fn p_gradient(&self, z: &[f64]) -> Vec<f64> {
        let space = self.space;
        let (d, m) = (space.dim(), space.components());
        let mesh = space.mesh();
        let mut g = vec![0.0; m * d];
        let mut out = vec![0.0; space.num_dofs()];
        for c in 0..mesh.num_cells() {
            space.cell_gradient(z, c, &mut g);
            let s2: f64 = g.iter().map(|v| v * v).sum();
            let coef = 6.0 * mesh.volume(c) * s2 * s2;
            let grads = space.cell_grads(c);
            for (kk, &v) in mesh.cell(c).iter().enumerate() {
                let Some(node) = space.dof_of_vertex(v) else { continue };
                for a in 0..m {
                    let mut s = 0.0;
                    for j in 0..d {
                        s += g[a * d + j] * grads[kk * d + j];
                    }
                    out[node * m + a] += coef * s;
                }
            }
        }
        out
    }

    /// One nonlinear power step in the `y` variable: `y <- M^{-1} W K^{-1} dJ(z)`.
    fn ascent(&self, y: &[f64]) -> Result<Vec<f64>> {
        let z = self.green(y)?;
        let s = self.p_gradient(&z);
        let ks = conjugate_gradient(&self.k, &s, None, CgOptions::default())?;
        let m = self.space.components();
        let w = self.space.lumped();
        let rhs: Vec<f64> = ks.iter().enumerate().map(|(i, v)| v * w[i / m]).collect();
        let next = conjugate_gradient(self.space.mass(), &rhs, None, CgOptions::default())?;
        let nrm = l2(self.space, &next);
        Ok(next.iter().map(|v| v / nrm).collect())
    }

    /// Polishes `y` by ascent steps kept only while the quotient increases.
    fn polish(&self, y: Vec<f64>, mut value: f64, sweeps: usize) -> Result<(Vec<f64>, f64)> {
        let mut y = y;
        for _ in 0..sweeps {
            let next = self.ascent(&y)?;
            let r = self.ratio(&self.green(&next)?)?;
            if !(r > value) {
                break;
            }
            let gain = r / value - 1.0;
            y = next;
            value = r;
            if gain < 1e-9 {
                break;
            }
        }
        Ok((y, value))
    }
}

/// `||grad z||_{L^6} / ||L z||_{L^2}` with the lumped-mass discrete operator at time `t`.
/// Invariant under `z -> alpha z` exactly when `alpha` is a power of two.
pub fn sobolev_ratio(space: &FemSpace, tensor: &dyn EllipticTensor, t: f64, z: &[f64]) -> Result<f64> {
    if z.len() != space.num_dofs() {
        return Err(Error::SpaceMismatch);
    }
    SobolevQuotient::new(space, tensor, t).ratio(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SobolevMeasurement {
    /// Maximized quotient.
    pub ratio: f64,
    /// Quotient at the smallest stiffness eigenvector.
    pub eigen_ratio: f64,
    /// Best unpolished random quotient.
    pub random_ratio: f64,
}

/// Number of best random candidates that are polished.
const POLISHED_CANDIDATES: usize = 5;
const POLISH_SWEEPS: usize = 60;

/// Maximizes the discrete Sobolev quotient over `trials` random `z = G y` and the smallest
/// stiffness eigenvector, then polishes the best candidates by nonlinear power ascent.
pub fn verify_discrete_sobolev(
    space: &FemSpace,
    tensor: &dyn EllipticTensor,
    t: f64,
    trials: usize,
    seed: u64,
) -> Result<SobolevMeasurement> {
    if trials == 0 {
        return Err(invalid("at least one trial is required"));
    }
    let q = SobolevQuotient::new(space, tensor, t);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<(f64, Vec<f64>)> = Vec::with_capacity(trials + 1);
    for _ in 0..trials {
        let y: Vec<f64> = (0..space.num_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = q.ratio(&q.green(&y)?)?;
        candidates.push((r, y));
    }
    let random_ratio = candidates.iter().map(|c| c.0).fold(0.0, f64::max);
    let (_, eig) = inverse_iteration(&q.k, space.mass(), 1e-10, 10_000)?;
    let eigen_ratio = q.ratio(&eig)?;
    let m = space.components();
    let w = space.lumped();
    let y_eig: Vec<f64> = q.k.mul_vec(&eig).iter().enumerate().map(|(i, v)| v / w[i / m]).collect();
    candidates.push((eigen_ratio, y_eig));
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = 0.0f64;
    for (r, y) in candidates.into_iter().take(POLISHED_CANDIDATES) {
        let (_, polished) = q.polish(y, r, POLISH_SWEEPS)?;
        best = best.max(polished);
    }
    Ok(SobolevMeasurement { ratio: best, eigen_ratio, random_ratio })
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while i > 0 {
        x += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    x
}

/// Space-time evaluation `(t, x) -> u(t, x)`.
pub type SpaceTimeField<'a> = dyn Fn(f64, &[f64], &mut [f64]) + 'a;

const HALTON_BASES: [u64; 6] = [2, 3, 5, 7, 11, 13];

/// `sup |u(t, x) - u(s, y)| / (|t - s| + |x - y|)^gamma` over Halton pairs in
/// `[0, T] x [0, 1]^d`. A third of the pairs share `x`, a third share `t`.
pub fn holder_seminorm_of(
    eval: &SpaceTimeField<'_>,
    dim: usize,
    components: usize,
    horizon: f64,
    gamma: f64,
    samples: usize,
) -> Result<f64> {
    if samples < 2 {
        return Err(invalid("at least two samples are required"));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid(format!("Hoelder exponent must lie in (0, 1], got {gamma}")));
    }
    let mut p = vec![0.0; 2 * (dim + 1)];
    let (mut a, mut b) = (vec![0.0; components], vec![0.0; components]);
    let mut diff = vec![0.0; components];
    let mut sup: f64 = 0.0;
    for i in 1..=samples as u64 {
        for (j, v) in p.iter_mut().enumerate() {
            *v = radical_inverse(i, HALTON_BASES[j]);
        }
        let t = horizon * p[0];
        let mut s = horizon * p[1];
        let x = p[2..2 + dim].to_vec();
        let mut y = p[2 + dim..2 + 2 * dim].to_vec();
        match i % 3 {
            1 => y.copy_from_slice(&x),
            2 => s = t,
            _ => {}
        }
        let dist = (t - s).abs() + euclid(&x.iter().zip(&y).map(|(u, v)| u - v).collect::<Vec<_>>());
        if dist == 0.0 {
            continue;
        }
        eval(t, &x, &mut a);
        eval(s, &y, &mut b);
        for k in 0..components {
            diff[k] = a[k] - b[k];
        }
        sup = sup.max(euclid(&diff) / dist.powf(gamma));
    }
    Ok(sup)
}

/// Hoelder seminorm of the piecewise affine interpolant.
pub fn holder_seminorm(traj: &Trajectory, space: &FemSpace, gamma: f64, samples: usize) -> Result<f64> {
    check_traj(traj, space)?;
    let (d, m) = (space.dim(), space.components());
    let eval = |t: f64, x: &[f64], out: &mut [f64]| {
        let (k, lambda) = traj.locate_time(t);
        let mut grad = vec![0.0; m * d];
        let mut hi = vec![0.0; m];
        space.evaluate(&traj.states[k].values, x, &mut hi, &mut grad);
        if k == 0 {
            out.copy_from_slice(&hi);
            return;
        }
        space.evaluate(&traj.states[k - 1].values, x, out, &mut grad);
        for (o, h) in out.iter_mut().zip(&hi) {
            *o = (1.0 - lambda) * *o + lambda * h;
        }
    };
    holder_seminorm_of(&eval, d, m, traj.horizon(), gamma, samples)
}

/// `max_k ||u_k - v_k||_{W^{1,2}}` between an unperturbed run and one whose inner solves start
/// from warm starts perturbed by uniform noise of size `perturbation`.
pub fn uniqueness_probe(
    spec: &ProblemSpec,
    space: &FemSpace,
    n_steps: usize,
    perturbation: f64,
    opts: &StepOptions,
    seed: u64,
) -> Result<f64> {
    let base = run(spec, space, n_steps, opts)?;
    let other = run_perturbed(spec, space, n_steps, opts, perturbation, seed)?;
    Ok(base
        .states
        .iter()
        .zip(&other.states)
        .map(|(a, b)| {
            let diff: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
            w12_norm(space, &diff)
        })
        .fold(0.0, f64::max))
}

/// Diagnostics of one `(h, tau)` level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelEstimates {
    pub h: f64,
    pub tau: f64,
    pub coercivity: f64,
    pub time_derivative: TimeDerivativeBound,
    pub laplace: LaplaceTrend,
    pub holder: f64,
}

/// Hoelder exponent and sample count used by [`estimate_level`].
pub const HOLDER_EXPONENT: f64 = 0.25;
pub const HOLDER_SAMPLES: usize = 10_000;

pub fn estimate_level(traj: &Trajectory, space: &FemSpace, spec: &ProblemSpec) -> Result<LevelEstimates> {
    let coercivity = verify_coercivity(traj, space, spec)?.into_iter().fold(0.0, f64::max);
    Ok(LevelEstimates {
        h: space.h(),
        tau: traj.tau(),
        coercivity,
        time_derivative: verify_time_derivative_bound(traj, space, spec)?,
        laplace: verify_laplace_bound(traj, space, spec)?,
        holder: holder_seminorm(traj, space, HOLDER_EXPONENT, HOLDER_SAMPLES)?,
    })
}
