//! Scalar double-well oracle: `R1 = |.|`, `W0(z) = z^2 - 2|z|`, load `f(t) = t`, `u(0) = -1`.
//!
//! Energetic (global) and branch-restricted (local) incremental steppers, the closed-form
//! weak, strong and extended solutions, energy balance and stability checks.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionMode {
    Weak,
    Strong,
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityKind {
    Global,
    Local,
}

/// Convex branch of `W0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Negative,
    Positive,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Negative => -1.0,
            Branch::Positive => 1.0,
        }
    }

    /// Branch containing `z`, or `None` at the convexity boundary `z = 0`.
    pub fn of(z: f64) -> Option<Self> {
        if z < 0.0 {
            Some(Branch::Negative)
        } else if z > 0.0 {
            Some(Branch::Positive)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarTrajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub mode: SolutionMode,
}

impl ScalarTrajectory {
    pub fn new(times: Vec<f64>, values: Vec<f64>, mode: SolutionMode) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(Error::InvalidInput("time grid and values must be nonempty and of equal length".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("time grid must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("trajectory values must be finite".into()));
        }
        Ok(Self { times, values, mode })
    }

    /// Samples a closed-form solution on `k T / n`, `k = 0..=n`.
    pub fn sample_exact(mode: SolutionMode, horizon: f64, n: usize) -> Result<Self> {
        let times: Vec<f64> = (0..=n).map(|k| horizon * k as f64 / n as f64).collect();
        let values = times.iter().map(|&t| exact_solution(mode, t)).collect::<Result<Vec<_>>>()?;
        Self::new(times, values, mode)
    }

    /// Continuous piecewise-affine interpolant.
    pub fn affine(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s < t);
        if k == 0 {
            return self.values[0];
        }
        if k == self.times.len() {
            return *self.values.last().unwrap();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let s = (t - t0) / (t1 - t0);
        (1.0 - s) * self.values[k - 1] + s * self.values[k]
    }

    /// Backward piecewise-constant interpolant: `u_k` on `(t_{k-1}, t_k]`.
    pub fn backward_constant(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s < t).min(self.times.len() - 1);
        self.values[k]
    }

    /// `int_0^T |u_bar(t) - u(t)| dt` for the backward piecewise-constant interpolant `u_bar`,
    /// eight midpoint samples per step.
    pub fn l1_error(&self, mode: SolutionMode) -> Result<f64> {
        let mut err = 0.0;
        for k in 1..self.times.len() {
            let (t0, t1) = (self.times[k - 1], self.times[k]);
            let h = (t1 - t0) / 8.0;
            for j in 0..8 {
                let t = t0 + (j as f64 + 0.5) * h;
                err += h * (self.values[k] - exact_solution(mode, t)?).abs();
            }
        }
        Ok(err)
    }
}

/// `W0(z) = min(z (z + 2), z (z - 2)) = z^2 - 2|z|`.
pub fn w0(z: f64) -> f64 {
    z * z - 2.0 * z.abs()
}

/// `DW0(z) = 2z - 2 sign(z)` with `sign(0) = 0`.
pub fn dw0(z: f64) -> f64 {
    let s = if z > 0.0 {
        1.0
    } else if z < 0.0 {
        -1.0
    } else {
        0.0
    };
    2.0 * z - 2.0 * s
}

/// `E(t, z) = W0(z) - t z`.
pub fn energy(t: f64, z: f64) -> f64 {
    w0(z) - t * z
}

/// Incremental objective `|z - u_prev| + E(t, z)`.
pub fn increment_objective(u_prev: f64, t: f64, z: f64) -> f64 {
    (z - u_prev).abs() + energy(t, z)
}

pub fn exact_solution(mode: SolutionMode, t: f64) -> Result<f64> {
    let name = match mode {
        SolutionMode::Weak => "weak",
        SolutionMode::Strong => "strong",
        SolutionMode::Extended => "extended",
    };
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::OutOfDomain { mode: name, t });
    }
    Ok(match mode {
        SolutionMode::Weak => {
            if t < 1.0 {
                -1.0
            } else {
                (t + 1.0) / 2.0
            }
        }
        SolutionMode::Strong => {
            if t >= 3.0 {
                return Err(Error::OutOfDomain { mode: name, t });
            }
            if t < 1.0 {
                -1.0
            } else {
                (t - 3.0) / 2.0
            }
        }
        SolutionMode::Extended => {
            if t < 1.0 {
                -1.0
            } else if t < 3.0 {
                (t - 3.0) / 2.0
            } else {
                (t + 1.0) / 2.0
            }
        }
    })
}

fn shrink(x: f64, k: f64) -> f64 {
    x.signum() * (x.abs() - k).max(0.0)
}

/// Unconstrained minimizer of `z^2 + b z + |z - u|`.
fn branch_minimizer(u: f64, b: f64) -> f64 {
    u + shrink(-0.5 * b - u, 0.5)
}

/// Linear coefficient of the branch quadratic `z^2 + b z` at load `t`.
fn branch_coefficient(branch: Branch, t: f64) -> f64 {
    // on branch s: W0(z) - t z = z^2 - 2 s z - t z
    -2.0 * branch.sign() - t
}

fn clamp_to(branch: Branch, z: f64) -> f64 {
    match branch {
        Branch::Negative => z.min(0.0),
        Branch::Positive => z.max(0.0),
    }
}

fn check_tau(tau: f64) {
    assert!(tau > 0.0 && tau.is_finite(), "time step must be positive");
}

/// Global minimizer of `z -> |z - u_prev| + W0(z) - t z`, ties broken toward `u_prev`, then
/// toward the negative well.
///
/// The step size only enters through `t`: the increment of a rate-independent system does
/// not depend on `tau`.
pub fn step_global(u_prev: f64, t: f64, tau: f64) -> f64 {
    check_tau(tau);
    let candidates = [
        clamp_to(Branch::Negative, branch_minimizer(u_prev, branch_coefficient(Branch::Negative, t))),
        clamp_to(Branch::Positive, branch_minimizer(u_prev, branch_coefficient(Branch::Positive, t))),
        0.0,
    ];
    let mut best = u_prev;
    let mut best_val = increment_objective(u_prev, t, u_prev);
    let stay = best_val;
    for &z in &candidates {
        let v = increment_objective(u_prev, t, z);
        if v < best_val {
            best = z;
            best_val = v;
        }
    }
    if stay <= best_val + 1e-12 * (1.0 + best_val.abs()) {
        u_prev
    } else {
        best
    }
}

/// Minimizer restricted to the convex branch of `u_prev` (the negative branch at `u_prev = 0`).
pub fn step_local(u_prev: f64, t: f64, tau: f64) -> Result<f64> {
    step_local_on_branch(u_prev, t, tau, Branch::of(u_prev).unwrap_or(Branch::Negative))
}

/// Branch-restricted step; fails with [`Error::BranchExit`] once the minimizer reaches the
/// convexity boundary `z = 0`.
pub fn step_local_on_branch(u_prev: f64, t: f64, tau: f64, branch: Branch) -> Result<f64> {
    check_tau(tau);
    let z = branch_minimizer(u_prev, branch_coefficient(branch, t));
    if branch.sign() * z <= 0.0 {
        return Err(Error::BranchExit { t, u_prev });
    }
    Ok(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepper {
    Global,
    Local,
}

/// Runs a stepper on the uniform grid `k T / N` with `N = round(T / tau)` from `u0`.
pub fn integrate(stepper: Stepper, u0: f64, tau: f64, horizon: f64) -> Result<ScalarTrajectory> {
    check_tau(tau);
    let n = ((horizon / tau).round() as usize).max(1);
    let mut times = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    times.push(0.0);
    values.push(u0);
    let mut branch = Branch::of(u0).unwrap_or(Branch::Negative);
    for k in 1..=n {
        let t = horizon * k as f64 / n as f64;
        let u_prev = *values.last().unwrap();
        let u = match stepper {
            Stepper::Global => step_global(u_prev, t, tau),
            Stepper::Local => step_local_on_branch(u_prev, t, tau, branch)?,
        };
        if let Some(b) = Branch::of(u) {
            branch = b;
        }
        times.push(t);
        values.push(u);
    }
    let mode = match stepper {
        Stepper::Global => SolutionMode::Weak,
        Stepper::Local => SolutionMode::Strong,
    };
    ScalarTrajectory::new(times, values, mode)
}

/// Scalar load `f` with its rate `f'`.
#[derive(Debug, Clone, Copy)]
pub struct ScalarLoad {
    pub value: fn(f64) -> f64,
    pub rate: fn(f64) -> f64,
}

impl ScalarLoad {
    pub fn ramp() -> Self {
        Self { value: |t| t, rate: |_| 1.0 }
    }

    pub fn zero() -> Self {
        Self { value: |_| 0.0, rate: |_| 0.0 }
    }
}

/// Largest defect over the grid of
/// `E(t, u(t)) - E(0, u(0)) + int_0^t f'(s) u(s) ds + Var(u; [0, t])`
/// with `E(t, z) = W0(z) - f(t) z`, trapezoid quadrature on the affine interpolant and
/// discrete jumps counted in the variation.
pub fn energy_balance_residual(traj: &ScalarTrajectory, load: ScalarLoad) -> f64 {
    let e = |t: f64, z: f64| w0(z) - (load.value)(t) * z;
    let (t0, u0) = (traj.times[0], traj.values[0]);
    let e0 = e(t0, u0);
    let mut work = 0.0;
    let mut var = 0.0;
    let mut worst: f64 = 0.0;
    for k in 1..traj.times.len() {
        let (ta, tb) = (traj.times[k - 1], traj.times[k]);
        let (ua, ub) = (traj.values[k - 1], traj.values[k]);
        work += 0.5 * (tb - ta) * ((load.rate)(ta) * ua + (load.rate)(tb) * ub);
        var += (ub - ua).abs();
        let defect = e(tb, ub) - e0 + work + var;
        worst = worst.max(defect.abs());
    }
    worst
}

/// `local`: `|t - DW0(u)| <= 1`; `global`: `E(t, u) <= E(t, z) + |z - u|` for all `z`.
pub fn stability_check(t: f64, u: f64, kind: StabilityKind) -> bool {
    match kind {
        StabilityKind::Local => (t - dw0(u)).abs() <= 1.0 + 1e-12,
        StabilityKind::Global => {
            let best = [Branch::Negative, Branch::Positive]
                .iter()
                .map(|&b| clamp_to(b, branch_minimizer(u, branch_coefficient(b, t))))
                .chain([0.0])
                .map(|z| increment_objective(u, t, z))
                .fold(f64::INFINITY, f64::min);
            let here = energy(t, u);
            here <= best + 1e-12 * (1.0 + best.abs())
        }
    }
}

/// `u(t, x) = max(t - 1, 0) phi(x)` and its `x`-derivative, `phi = 1 - cosh(x - 1/2) / cosh(1/2)`
/// solving `-phi'' + phi = 1`, `phi(0) = phi(1) = 0`.
pub fn scalar_pde_reference(x: f64, t: f64) -> (f64, f64) {
    let a = (t - 1.0).max(0.0);
    let c = 0.5f64.cosh();
    let phi = 1.0 - (x - 0.5).cosh() / c;
    let dphi = -(x - 0.5).sinh() / c;
    (a * phi, a * dphi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_forms() {
        assert_eq!(exact_solution(SolutionMode::Weak, 1.5).unwrap(), 1.25);
        assert_eq!(exact_solution(SolutionMode::Strong, 1.5).unwrap(), -0.75);
        assert_eq!(exact_solution(SolutionMode::Extended, 4.0).unwrap(), 2.5);
        assert!(matches!(exact_solution(SolutionMode::Strong, 3.0), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn global_steps() {
        assert_eq!(step_global(-1.0, 0.5, 1e-3), -1.0);
        assert!((step_global(-1.0, 1.5, 1e-3) - 1.25).abs() < 1e-15);
        // 0 is a local maximum of W0, so even without load the step leaves it; the two
        // symmetric minimizers tie and the negative one is kept
        let z = step_global(0.0, 0.0, 1e-3);
        assert_eq!(z, -0.5);
        assert!((increment_objective(0.0, 0.0, z) + 0.25).abs() < 1e-15);
        assert_eq!(step_global(-1.0, 0.0, 1e-3), -1.0);
        // at t = 1 both wells give objective 0; the tie keeps u_prev
        assert_eq!(step_global(-1.0, 1.0, 1e-3), -1.0);
        assert!((increment_objective(-1.0, 1.0, 1.0) - increment_objective(-1.0, 1.0, -1.0)).abs() < 1e-15);
    }

    #[test]
    fn local_steps() {
        assert!((step_local(-1.0, 1.5, 1e-3).unwrap() + 0.75).abs() < 1e-15);
        assert_eq!(step_local(-1.0, 0.5, 1e-3).unwrap(), -1.0);
        let mut u = -0.01;
        let mut t = 2.99;
        let tau = 1e-3;
        let exit = loop {
            match step_local(u, t, tau) {
                Ok(z) => u = z,
                Err(Error::BranchExit { t, .. }) => break t,
                Err(e) => panic!("{e}"),
            }
            t += tau;
        };
        assert!(exit >= 3.0 - 1e-9 && exit <= 3.0 + 5.0 * tau);
    }

    #[test]
    fn stability_examples() {
        assert!(stability_check(0.5, -1.0, StabilityKind::Local));
        assert!(stability_check(2.0, -0.5, StabilityKind::Local));
        assert!(!stability_check(2.0, -0.5, StabilityKind::Global));
        assert!(stability_check(0.0, -1.0, StabilityKind::Global));
    }

    #[test]
    fn pde_reference_values() {
        assert_eq!(scalar_pde_reference(0.25, 0.5), (0.0, 0.0));
        let (v, g) = scalar_pde_reference(0.0, 2.0);
        assert!(v.abs() < 1e-15);
        assert!((g - 0.5f64.tanh()).abs() < 1e-15);
        let (v, _) = scalar_pde_reference(0.5, 2.0);
        assert!((v - (1.0 - 1.0 / 0.5f64.cosh())).abs() < 1e-15);
        assert!((v - 0.113188).abs() < 1e-5);
    }

    #[test]
    fn balance_of_exact_solutions() {
        let weak = ScalarTrajectory::sample_exact(SolutionMode::Weak, 2.0, 20_000).unwrap();
        assert!(energy_balance_residual(&weak, ScalarLoad::ramp()) <= 1e-3);
        let times: Vec<f64> = (0..30_000).map(|k| k as f64 * 1e-4).collect();
        let values = times.iter().map(|&t| exact_solution(SolutionMode::Strong, t).unwrap()).collect();
        let strong = ScalarTrajectory::new(times, values, SolutionMode::Strong).unwrap();
        assert!(energy_balance_residual(&strong, ScalarLoad::ramp()) <= 1e-3);
        let still = ScalarTrajectory::new(vec![0.0, 0.5, 1.0], vec![-1.0; 3], SolutionMode::Weak).unwrap();
        assert_eq!(energy_balance_residual(&still, ScalarLoad::zero()), 0.0);
    }

    #[test]
    fn steppers_track_exact_solutions() {
        for tau in [1e-2, 1e-3] {
            let g = integrate(Stepper::Global, -1.0, tau, 2.0).unwrap();
            let l = integrate(Stepper::Local, -1.0, tau, 2.0).unwrap();
            for (k, &t) in g.times.iter().enumerate() {
                let w = exact_solution(SolutionMode::Weak, t).unwrap();
                let s = exact_solution(SolutionMode::Strong, t).unwrap();
                if (t - 1.0).abs() > 1e-9 {
                    assert!((g.values[k] - w).abs() < 1e-12, "global t={t}");
                }
                assert!((l.values[k] - s).abs() < 1e-12, "local t={t}");
                assert!(stability_check(t, g.values[k], StabilityKind::Local));
                assert!(stability_check(t, l.values[k], StabilityKind::Local));
            }
        }
    }

    proptest! {
        #[test]
        fn steps_decrease_the_increment(u in -3.0..3.0f64, t in 0.0..4.0f64) {
            let z = step_global(u, t, 1e-2);
            prop_assert!(increment_objective(u, t, z) <= increment_objective(u, t, u) + 1e-12);
            for probe in [-3.0, -1.0, -0.3, 0.0, 0.4, 1.0, 2.5] {
                prop_assert!(increment_objective(u, t, z) <= increment_objective(u, t, probe) + 1e-12);
            }
            if u != 0.0 {
                if let Ok(z) = step_local(u, t, 1e-2) {
                    prop_assert!(increment_objective(u, t, z) <= increment_objective(u, t, u) + 1e-12);
                    prop_assert!(z * u > 0.0);
                }
            }
        }
    }
}
