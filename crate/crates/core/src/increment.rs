//! One implicit step: minimization of
//! `F(v) = sum_i w_i R1(v_i - u_prev_i) + v.K v / 2 + sum_i w_i W0(v_i) - b.v`
//! by forward-backward splitting with momentum and a nodewise shifted prox.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fem::{assemble_load, assemble_stiffness, FemSpace, NodalField};
use crate::linalg::{norm_inf, power_iteration, CsrMatrix};
use crate::model::{DissipationPotential, EnergyDensity, ProblemSpec};

/// Inner solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepOptions {
    /// Bound on the fixed-point residual in force-density units, scaled by `max(1, |v|_inf)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Step size is `safety / L`.
    pub safety: f64,
    /// Momentum with restart on objective increase.
    pub acceleration: bool,
    /// Fail with [`Error::NonConvexTotal`] once a negative secant curvature of the smooth
    /// part is observed. Only meaningful for specs that bypass admissibility.
    pub require_convex: bool,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 100_000, safety: 0.9, acceleration: true, require_convex: false }
    }
}

impl StepOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(invalid(format!("increment tolerance must be positive, got {}", self.tol)));
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return Err(invalid(format!("safety factor must lie in (0, 1), got {}", self.safety)));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepCertificate {
    pub iterations: usize,
    /// Final fixed-point residual, scaled like the tolerance.
    pub residual: f64,
    /// Worst normalized violation of the discrete variational inequality.
    pub el_violation: f64,
    /// `F(u_k) - F(u_prev)`.
    pub objective_change: f64,
    pub decreased: bool,
}

/// Data of one incremental functional.
#[derive(Debug, Clone)]
pub struct IncrementProblem<'a> {
    weights: Cow<'a, [f64]>,
    stiffness: Cow<'a, CsrMatrix>,
    stiffness_max: f64,
    load: Vec<f64>,
    components: usize,
    dissipation: &'a dyn DissipationPotential,
    energy: &'a dyn EnergyDensity,
}

/// Upper estimate of `lambda_max(K)`: 50 power steps, inflated by 10% and capped by the
/// Gershgorin bound.
pub fn stiffness_bound(k: &CsrMatrix) -> f64 {
    (1.1 * power_iteration(k, 50)).min(k.gershgorin_bound())
}

impl<'a> IncrementProblem<'a> {
    /// Assembles `K(t)`, the load `M I_h f(t)` and the lumped weights.
    pub fn assemble(space: &'a FemSpace, spec: &'a ProblemSpec, t: f64) -> Self {
        let k = assemble_stiffness(space, spec.tensor.as_ref(), t);
        let k_max = stiffness_bound(&k);
        Self::build(space, spec, t, Cow::Owned(k), k_max)
    }

    /// Reuses a stiffness matrix, e.g. for time-independent tensors.
    pub fn with_stiffness(
        space: &'a FemSpace,
        spec: &'a ProblemSpec,
        t: f64,
        stiffness: &'a CsrMatrix,
        stiffness_max: f64,
    ) -> Self {
        Self::build(space, spec, t, Cow::Borrowed(stiffness), stiffness_max)
    }

    fn build(space: &'a FemSpace, spec: &'a ProblemSpec, t: f64, k: Cow<'a, CsrMatrix>, k_max: f64) -> Self {
        Self {
            weights: Cow::Borrowed(space.lumped()),
            stiffness: k,
            stiffness_max: k_max,
            load: assemble_load(space, spec.force.as_ref(), t),
            components: space.components(),
            dissipation: spec.dissipation.as_ref(),
            energy: spec.energy.as_ref(),
        }
    }

    /// Functional from raw parts: one weight per node, `components` unknowns per node.
    pub fn from_parts(
        weights: Vec<f64>,
        stiffness: CsrMatrix,
        load: Vec<f64>,
        components: usize,
        dissipation: &'a dyn DissipationPotential,
        energy: &'a dyn EnergyDensity,
    ) -> Result<Self> {
        let n = weights.len() * components;
        if components == 0 || stiffness.dim() != n || load.len() != n {
            return Err(invalid("increment parts have inconsistent sizes"));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(invalid("lumped weights must be positive"));
        }
        let k_max = stiffness_bound(&stiffness);
        Ok(Self {
            weights: Cow::Owned(weights),
            stiffness: Cow::Owned(stiffness),
            stiffness_max: k_max,
            load,
            components,
            dissipation,
            energy,
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.load.len()
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() == self.num_dofs() {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    /// Smooth part `v.K v / 2 + sum w_i W0(v_i) - b.v`.
    pub fn smooth_value(&self, v: &[f64]) -> f64 {
        self.smooth_value_with(v, &self.stiffness.mul_vec(v))
    }

    fn smooth_value_with(&self, v: &[f64], kv: &[f64]) -> f64 {
        let m = self.components;
        let mut s = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            s += w * self.energy.value(&v[i * m..(i + 1) * m]);
        }
        for j in 0..v.len() {
            s += (0.5 * kv[j] - self.load[j]) * v[j];
        }
        s
    }

    /// Full incremental functional.
    pub fn objective(&self, u_prev: &[f64], v: &[f64]) -> f64 {
        self.smooth_value(v) + self.dissipation_value(u_prev, v, &mut vec![0.0; self.components])
    }

    fn dissipation_value(&self, u_prev: &[f64], v: &[f64], d: &mut [f64]) -> f64 {
        let m = self.components;
        let mut s = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            for a in 0..m {
                d[a] = v[i * m + a] - u_prev[i * m + a];
            }
            s += w * self.dissipation.evaluate(d);
        }
        s
    }

    /// `K v + w_i DW0(v_i) - b`.
    pub fn smooth_gradient(&self, v: &[f64], out: &mut [f64]) {
        self.stiffness.mul_vec_into(v, out);
        let kv = out.to_vec();
        self.smooth_gradient_with(v, &kv, out, &mut vec![0.0; self.components]);
    }

    fn smooth_gradient_with(&self, v: &[f64], kv: &[f64], out: &mut [f64], g: &mut [f64]) {
        let m = self.components;
        for (i, w) in self.weights.iter().enumerate() {
            self.energy.gradient(&v[i * m..(i + 1) * m], g);
            for a in 0..m {
                let j = i * m + a;
                out[j] = kv[j] + w * g[a] - self.load[j];
            }
        }
    }

    fn lipschitz(&self, radius: f64) -> f64 {
        let wmax = self.weights.iter().cloned().fold(0.0, f64::max);
        (self.stiffness_max + wmax * self.energy.hessian_bound(radius)).max(f64::MIN_POSITIVE)
    }

    /// Minimizes the functional from `warm` (default `u_prev`).
    ///
    /// Momentum is reset when the objective increases or when the step opposes the momentum
    /// direction. `K y` for the extrapolated point is combined from `K x` of the last two
    /// iterates, so each iteration costs one sparse product.
    pub fn solve(&self, u_prev: &[f64], warm: Option<&[f64]>, opts: &StepOptions) -> Result<(Vec<f64>, StepCertificate)> {
        opts.validate()?;
        self.check_len(u_prev)?;
        let n = self.num_dofs();
        let m = self.components;
        let mut x = warm.unwrap_or(u_prev).to_vec();
        self.check_len(&x)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(invalid("warm start must be finite"));
        }
        let mut radius = norm_inf(u_prev).max(norm_inf(&x)) + 1.0;
        let mut lip = self.lipschitz(radius);
        let mut gamma = opts.safety / lip;
        let mut block = vec![0.0; m];
        let mut proxed = vec![0.0; m];
        let mut kx = self.stiffness.mul_vec(&x);
        let mut fx = self.smooth_value_with(&x, &kx) + self.dissipation_value(u_prev, &x, &mut block);
        let mut y = x.clone();
        let mut ky = kx.clone();
        let mut k_new = vec![0.0; n];
        let mut grad = vec![0.0; n];
        let mut x_new = vec![0.0; n];
        let mut theta = 1.0f64;
        let mut prev_secant: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut residual = f64::INFINITY;
        for it in 0..opts.max_iter {
            self.smooth_gradient_with(&y, &ky, &mut grad, &mut block);
            if opts.require_convex {
                if let Some((py, pg)) = &prev_secant {
                    let (mut num, mut den) = (0.0, 0.0);
                    for j in 0..n {
                        let d = y[j] - py[j];
                        num += d * (grad[j] - pg[j]);
                        den += d * d;
                    }
                    if den > 0.0 && num < -1e-12 * den * self.stiffness_max.max(1.0) {
                        return Err(Error::NonConvexTotal { curvature: num / den });
                    }
                }
                prev_secant = Some((y.clone(), grad.clone()));
            }
            residual = 0.0;
            for (i, w) in self.weights.iter().enumerate() {
                for a in 0..m {
                    let j = i * m + a;
                    block[a] = y[j] - gamma * grad[j] - u_prev[j];
                }
                self.dissipation.prox(&block, gamma * w, &mut proxed);
                for a in 0..m {
                    let j = i * m + a;
                    x_new[j] = u_prev[j] + proxed[a];
                    residual = f64::max(residual, (y[j] - x_new[j]).abs() / (gamma * w));
                }
            }
            self.stiffness.mul_vec_into(&x_new, &mut k_new);
            let fnew = self.smooth_value_with(&x_new, &k_new) + self.dissipation_value(u_prev, &x_new, &mut block);
            if !fnew.is_finite() {
                return Err(Error::NonFiniteEvaluation { what: "increment objective", sample: vec![it as f64] });
            }
            if fnew > fx + 1e-14 * (1.0 + fx.abs()) {
                if theta > 1.0 {
                    // momentum overshoot: restart from the last accepted iterate
                    theta = 1.0;
                } else {
                    lip *= 2.0;
                    gamma = opts.safety / lip;
                }
                y.copy_from_slice(&x);
                ky.copy_from_slice(&kx);
                continue;
            }
            residual /= norm_inf(&x_new).max(1.0);
            if residual <= opts.tol {
                return Ok(self.certify(u_prev, x_new, it + 1, residual));
            }
            let reach = norm_inf(&x_new);
            if reach > radius {
                radius = reach + 1.0;
                lip = lip.max(self.lipschitz(radius));
                gamma = opts.safety / lip;
            }
            let opposed = (0..n).map(|j| (y[j] - x_new[j]) * (x_new[j] - x[j])).sum::<f64>() > 0.0;
            if !opts.acceleration || opposed {
                theta = 1.0;
                y.copy_from_slice(&x_new);
                ky.copy_from_slice(&k_new);
            } else {
                let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
                let beta = (theta - 1.0) / theta_next;
                for j in 0..n {
                    y[j] = x_new[j] + beta * (x_new[j] - x[j]);
                    ky[j] = k_new[j] + beta * (k_new[j] - kx[j]);
                }
                theta = theta_next;
            }
            debug_assert!(fnew <= fx + 1e-14 * (1.0 + fx.abs()));
            std::mem::swap(&mut x, &mut x_new);
            std::mem::swap(&mut kx, &mut k_new);
            fx = fnew;
        }
        Err(Error::NoConvergence { step: None, iterations: opts.max_iter, residual })
    }

    fn certify(&self, u_prev: &[f64], x: Vec<f64>, iterations: usize, residual: f64) -> (Vec<f64>, StepCertificate) {
        let f_prev = self.objective(u_prev, u_prev);
        let f_new = self.objective(u_prev, &x);
        let change = f_new - f_prev;
        let cert = StepCertificate {
            iterations,
            residual,
            el_violation: self.el_residual(u_prev, &x),
            objective_change: change,
            decreased: change <= 1e-12 * (1.0 + f_prev.abs()),
        };
        (x, cert)
    }

    /// Worst violation of
    /// `sum w_i [R1(xi_i) - R1(delta_i)] + DG(v).(xi - delta) >= 0`, `delta = v - u_prev`,
    /// over `xi` in `{0, 2 delta, delta +- eps e_j}`. Each test is divided by its weighted
    /// size, so the result is in force-density units, then by `max(1, |v|_inf)`.
    pub fn el_residual(&self, u_prev: &[f64], v: &[f64]) -> f64 {
        let n = self.num_dofs();
        let m = self.components;
        let mut g = vec![0.0; n];
        self.smooth_gradient(v, &mut g);
        let delta: Vec<f64> = v.iter().zip(u_prev).map(|(a, b)| a - b).collect();
        let eps = 1e-6 * norm_inf(&delta).max(1.0);
        let mut worst: f64 = 0.0;
        let psi = self.dissipation_value(u_prev, v, &mut vec![0.0; m]);
        let g_delta: f64 = g.iter().zip(&delta).map(|(a, b)| a * b).sum();
        let size: f64 = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * delta[i * m..(i + 1) * m].iter().map(|d| d * d).sum::<f64>().sqrt())
            .sum();
        if size > 0.0 {
            // xi = 0 and xi = 2 delta: R1 is 1-homogeneous, so both reduce to psi + g.delta = 0
            worst = worst.max((psi + g_delta).abs() / size);
        }
        let mut block = vec![0.0; m];
        for (i, w) in self.weights.iter().enumerate() {
            let here = self.dissipation.evaluate(&delta[i * m..(i + 1) * m]);
            for a in 0..m {
                for s in [-1.0, 1.0] {
                    block.copy_from_slice(&delta[i * m..(i + 1) * m]);
                    block[a] += s * eps;
                    let lhs = w * (self.dissipation.evaluate(&block) - here) + s * eps * g[i * m + a];
                    worst = worst.max(-lhs / (eps * w));
                }
            }
        }
        worst / norm_inf(v).max(1.0)
    }
}

fn gate(spec: &ProblemSpec) -> Result<()> {
    if spec.bypass_admissibility {
        return Ok(());
    }
    if let (Some(margin), Some(cp)) = (spec.convexity_margin(), spec.poincare_constant) {
        if margin <= 0.0 {
            let mu = spec.energy.monotonicity_modulus();
            return Err(Error::Inadmissible { product: mu * cp * cp, kappa: spec.tensor.ellipticity(), margin });
        }
    }
    Ok(())
}

/// Solves one increment at time `t_k` from `u_prev`.
pub fn minimize_increment(
    space: &FemSpace,
    u_prev: &NodalField,
    t_k: f64,
    spec: &ProblemSpec,
    opts: &StepOptions,
) -> Result<(NodalField, StepCertificate)> {
    space.check(u_prev)?;
    spec.validate_shape()?;
    if spec.components != space.components() || spec.dimension != space.dim() {
        return Err(Error::SpaceMismatch);
    }
    gate(spec)?;
    let problem = IncrementProblem::assemble(space, spec, t_k);
    let (values, cert) = problem.solve(&u_prev.values, None, opts)?;
    Ok((space.field(values, Some(t_k))?, cert))
}

/// [`IncrementProblem::el_residual`] for fields of `space` at time `t_k`.
pub fn el_residual(space: &FemSpace, u_k: &NodalField, u_prev: &NodalField, t_k: f64, spec: &ProblemSpec) -> Result<f64> {
    space.check(u_k)?;
    space.check(u_prev)?;
    let problem = IncrementProblem::assemble(space, spec, t_k);
    Ok(problem.el_residual(&u_prev.values, &u_k.values))
}
