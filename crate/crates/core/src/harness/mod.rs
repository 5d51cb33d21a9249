//! Convergence benchmarks: space-time error functionals, sweeps over `(h, tau)` levels,
//! log-log rate fits, run configuration and file output.

mod config;
mod output;
mod sweep;
mod verify;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fem::{error_norms_sq, FemSpace};
use crate::mesh::{unit_interval, unit_square, SimplicialMesh};
use crate::rothe::Trajectory;
use crate::zero_dim::scalar_pde_reference;

pub use config::{RunConfig, Suite};
pub use output::{plot_data, sweep_csv, write_trajectory, Manifest, SuiteRow, suite_csv};
pub use sweep::{self_reference, self_reference_errors, sweep_and_fit, SelfReference, SweepCell, SweepPlan, SweepResult};
pub use verify::run_suite;

/// Space-time function `(t, x) -> (value, row-major Jacobian)`.
pub type ExactSolution = dyn Fn(f64, &[f64], &mut [f64], &mut [f64]) + Sync;

/// Sub-samples per time step of the trapezoid rule in [`error_l2h1`].
pub const TIME_SUBSAMPLES: usize = 5;

/// `max(t - 1, 0) phi(x)` of the scalar exact problem, with its `x`-derivative.
pub fn exact_1d_solution(t: f64, x: &[f64], value: &mut [f64], gradient: &mut [f64]) {
    let (u, du) = scalar_pde_reference(x[0], t);
    value[0] = u;
    gradient[0] = du;
}

/// Unit interval or unit square with `n` cells per side.
pub fn unit_mesh(dim: usize, n: usize) -> Result<SimplicialMesh> {
    if n < 2 {
        return Err(invalid(format!("need at least 2 cells per side, got {n}")));
    }
    match dim {
        1 => Ok(unit_interval(n)),
        2 => Ok(unit_square(n)),
        _ => Err(invalid(format!("dimension must be 1 or 2, got {dim}"))),
    }
}

/// Composite trapezoid rule on the uniform sub-grid with [`TIME_SUBSAMPLES`] points per step.
/// Calls `sample(k, lambda, t)` with the step index and affine weight of `u_k`, and sums the
/// weighted results.
pub(crate) fn time_trapezoid(traj: &Trajectory, mut sample: impl FnMut(usize, f64, f64) -> Result<f64>) -> Result<f64> {
    let n = traj.num_steps();
    let total = TIME_SUBSAMPLES * n;
    let dt = traj.horizon() / total as f64;
    let mut acc = 0.0;
    for i in 0..=total {
        let (k, lambda) = if i == 0 {
            (0, 1.0)
        } else {
            let k = i.div_ceil(TIME_SUBSAMPLES);
            (k, (i - (k - 1) * TIME_SUBSAMPLES) as f64 / TIME_SUBSAMPLES as f64)
        };
        let t = traj.horizon() * i as f64 / total as f64;
        let weight = if i == 0 || i == total { 0.5 * dt } else { dt };
        acc += weight * sample(k, lambda, t)?;
    }
    Ok(acc)
}

fn combine(traj: &Trajectory, k: usize, lambda: f64) -> Vec<f64> {
    if k == 0 {
        return traj.states[0].values.clone();
    }
    let (a, b) = (&traj.states[k - 1].values, &traj.states[k].values);
    a.iter().zip(b).map(|(x, y)| (1.0 - lambda) * x + lambda * y).collect()
}

/// `int_0^T ||u_tau^h(t) - u(t)||_{W^{1,2}}^2 dt`: trapezoid in time with
/// [`TIME_SUBSAMPLES`] sub-samples per step, a Gauss rule of order 4 in space.
pub fn error_l2h1(traj: &Trajectory, space: &FemSpace, exact: &ExactSolution) -> Result<f64> {
    if traj.space_id != space.id() {
        return Err(Error::SpaceMismatch);
    }
    time_trapezoid(traj, |k, lambda, t| {
        let field = combine(traj, k, lambda);
        Ok(error_norms_sq(space, &field, &|x, v, g| exact(t, x, v, g)).w12())
    })
}

/// Least-squares line through `(log parameter, log squared error)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl RateFit {
    /// Needs at least 3 points with strictly decreasing parameters and positive errors.
    pub fn fit(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InsufficientLevels(points.len()));
        }
        if points.windows(2).any(|w| !(w[1].0 < w[0].0)) {
            return Err(Error::InsufficientLevels(points.len()));
        }
        if points.iter().any(|&(p, e)| !(p > 0.0 && e > 0.0 && p.is_finite() && e.is_finite())) {
            return Err(invalid("rate fit needs positive finite parameters and errors"));
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
        Ok(Self { points, slope, intercept, r_squared })
    }

    /// `slope >= 0.9 * exponent`.
    pub fn passes(&self, exponent: f64) -> bool {
        self.slope >= 0.9 * exponent
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::increment::StepOptions;
    use crate::model::{ProblemSpec, ZeroForce};
    use crate::rothe::run;
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn synthetic_fit_has_unit_slope() {
        let f = RateFit::fit(vec![(0.1, 1e-2), (0.05, 5e-3), (0.025, 2.5e-3)]).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(f.passes(1.0));
        assert!(matches!(RateFit::fit(vec![(0.1, 1.0), (0.05, 0.5)]), Err(Error::InsufficientLevels(2))));
        assert!(RateFit::fit(vec![(0.1, 1.0), (0.2, 0.5), (0.05, 0.1)]).is_err());
        assert!(RateFit::fit(vec![(0.1, 1.0), (0.05, 0.0), (0.025, 0.1)]).is_err());
    }

    #[test]
    fn zero_solution_has_zero_error() {
        let s = FemSpace::new(Arc::new(unit_interval(8)), 1);
        let spec = ProblemSpec::exact_1d(1.0).with_force(Arc::new(ZeroForce { components: 1 }));
        let traj = run(&spec, &s, 4, &StepOptions::default()).unwrap();
        let zero = |_t: f64, _x: &[f64], v: &mut [f64], g: &mut [f64]| {
            v[0] = 0.0;
            g[0] = 0.0;
        };
        assert_eq!(error_l2h1(&traj, &s, &zero).unwrap(), 0.0);
    }

    #[test]
    fn exact_problem_error_is_small() {
        let s = FemSpace::new(Arc::new(unit_interval(64)), 1);
        let traj = run(&ProblemSpec::exact_1d(2.0), &s, 2000, &StepOptions::default()).unwrap();
        let e = error_l2h1(&traj, &s, &exact_1d_solution).unwrap();
        assert!(e > 0.0 && e <= 5e-3, "{e}");
    }

    #[test]
    fn trapezoid_integrates_affine_interpolants_of_constants() {
        let s = FemSpace::new(Arc::new(unit_interval(4)), 1);
        let traj = run(&ProblemSpec::exact_1d(3.0), &s, 6, &StepOptions::default()).unwrap();
        let total = time_trapezoid(&traj, |_, _, _| Ok(1.0)).unwrap();
        assert!((total - 3.0).abs() < 1e-12);
        let linear = time_trapezoid(&traj, |_, _, t| Ok(t)).unwrap();
        assert!((linear - 4.5).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn log_linear_data_recovers_slope(slope in 0.2f64..3.0, c in -5.0f64..5.0, h0 in 0.05f64..0.5) {
            let pts: Vec<(f64, f64)> = (0..4).map(|i| {
                let h = h0 / 2f64.powi(i);
                (h, (c + slope * h.ln()).exp())
            }).collect();
            let f = RateFit::fit(pts).unwrap();
            prop_assert!((f.slope - slope).abs() < 1e-12);
            prop_assert!((f.intercept - c).abs() < 1e-10);
        }

        #[test]
        fn error_scales_quadratically(alpha in 0.1f64..4.0) {
            let s = FemSpace::new(Arc::new(unit_interval(8)), 1);
            let traj = run(&ProblemSpec::exact_1d(2.0), &s, 8, &StepOptions::default()).unwrap();
            // the zero function makes the difference equal to the discrete field itself
            let zero = |_t: f64, _x: &[f64], v: &mut [f64], g: &mut [f64]| { v[0] = 0.0; g[0] = 0.0; };
            let base = error_l2h1(&traj, &s, &zero).unwrap();
            let mut scaled = traj.clone();
            for u in &mut scaled.states {
                u.values.iter_mut().for_each(|v| *v *= alpha);
            }
            let e = error_l2h1(&scaled, &s, &zero).unwrap();
            prop_assert!(base > 0.0);
            prop_assert!((e - alpha * alpha * base).abs() <= 1e-12 * e.max(1e-300));
        }
    }
}
