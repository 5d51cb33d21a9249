use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fem::{h1_semi, l2, FemSpace};
use crate::harness::{error_l2h1, time_trapezoid, unit_mesh, ExactSolution, RateFit};
use crate::increment::StepOptions;
use crate::model::ProblemSpec;
use crate::rothe::run;

/// Levels of an `(h, tau)` sweep. The `h` sweep runs at `fixed_time` steps, the `tau` sweep
/// at `fixed_space` cells per side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPlan {
    pub space_levels: Vec<usize>,
    pub time_levels: Vec<usize>,
    pub fixed_time: usize,
    pub fixed_space: usize,
}

impl SweepPlan {
    /// Fixes each non-swept parameter at the finest level of the other list.
    pub fn new(space_levels: Vec<usize>, time_levels: Vec<usize>) -> Self {
        let fixed_time = time_levels.iter().copied().max().unwrap_or(1);
        let fixed_space = space_levels.iter().copied().max().unwrap_or(2);
        Self { space_levels, time_levels, fixed_time, fixed_space }
    }

    pub fn with_fixed(mut self, fixed_space: usize, fixed_time: usize) -> Self {
        self.fixed_space = fixed_space;
        self.fixed_time = fixed_time;
        self
    }

    fn validate(&self) -> Result<()> {
        for levels in [&self.space_levels, &self.time_levels] {
            if levels.len() < 3 {
                return Err(Error::InsufficientLevels(levels.len()));
            }
            if levels.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid("sweep levels must be strictly increasing"));
            }
        }
        if self.fixed_time == 0 || self.fixed_space < 2 || self.space_levels[0] < 2 || self.time_levels[0] == 0 {
            return Err(invalid("sweep needs n >= 2 and N >= 1"));
        }
        Ok(())
    }
}

/// One run of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepCell {
    pub n_space: usize,
    pub n_time: usize,
    pub h: f64,
    pub tau: f64,
    pub sq_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub h_cells: Vec<SweepCell>,
    pub tau_cells: Vec<SweepCell>,
    pub h_fit: RateFit,
    pub tau_fit: RateFit,
    /// Theoretical exponents: 1 in `h`, `min(1, a - 1)` in `tau`.
    pub h_exponent: f64,
    pub tau_exponent: f64,
}

impl SweepResult {
    pub fn h_pass(&self) -> bool {
        self.h_fit.passes(self.h_exponent)
    }

    pub fn tau_pass(&self) -> bool {
        self.tau_fit.passes(self.tau_exponent)
    }
}

fn run_cell(spec: &ProblemSpec, exact: &ExactSolution, n: usize, nt: usize, opts: &StepOptions) -> Result<SweepCell> {
    let space = FemSpace::new(Arc::new(unit_mesh(spec.dimension, n)?), spec.components);
    let traj = run(spec, &space, nt, opts)?;
    let sq_error = error_l2h1(&traj, &space, exact)?;
    log::info!("sweep cell n = {n}, N = {nt}: squared error {sq_error:e}");
    Ok(SweepCell { n_space: n, n_time: nt, h: space.h(), tau: traj.tau(), sq_error })
}

/// Runs the `h` and `tau` sweeps of `plan` concurrently and fits log-log slopes of the
/// squared error. Cells are merged in sorted `(n, N)` order.
pub fn sweep_and_fit(spec: &ProblemSpec, exact: &ExactSolution, plan: &SweepPlan, opts: &StepOptions) -> Result<SweepResult> {
    plan.validate()?;
    let mut jobs: Vec<(usize, usize)> = plan
        .space_levels
        .iter()
        .map(|&n| (n, plan.fixed_time))
        .chain(plan.time_levels.iter().map(|&nt| (plan.fixed_space, nt)))
        .collect();
    jobs.sort_unstable();
    jobs.dedup();
    let cells: Vec<SweepCell> = jobs
        .par_iter()
        .map(|&(n, nt)| run_cell(spec, exact, n, nt, opts))
        .collect::<Result<Vec<_>>>()?;
    let find = |n: usize, nt: usize| *cells.iter().find(|c| c.n_space == n && c.n_time == nt).expect("cell was run");
    let h_cells: Vec<SweepCell> = plan.space_levels.iter().map(|&n| find(n, plan.fixed_time)).collect();
    let tau_cells: Vec<SweepCell> = plan.time_levels.iter().map(|&nt| find(plan.fixed_space, nt)).collect();
    let h_fit = RateFit::fit(h_cells.iter().map(|c| (c.h, c.sq_error)).collect())?;
    let tau_fit = RateFit::fit(tau_cells.iter().map(|c| (c.tau, c.sq_error)).collect())?;
    Ok(SweepResult { h_cells, tau_cells, h_fit, tau_fit, h_exponent: 1.0, tau_exponent: spec.force.time_rate() })
}

/// Errors of coarse runs against a fine reference run, with the fit in `h`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfReference {
    pub cells: Vec<SweepCell>,
    pub fit: RateFit,
}

/// Squared space-time errors of each coarse level `(n, N)` against the reference level,
/// measured on the reference mesh after prolongation. Requires nested meshes.
pub fn self_reference_errors(
    spec: &ProblemSpec,
    coarse: &[(usize, usize)],
    reference: (usize, usize),
    opts: &StepOptions,
) -> Result<Vec<SweepCell>> {
    let (n_ref, nt_ref) = reference;
    if coarse.iter().any(|&(n, _)| n == 0 || n_ref % n != 0) {
        return Err(invalid("reference cells per side must be a multiple of every coarse level"));
    }
    let fine = FemSpace::new(Arc::new(unit_mesh(spec.dimension, n_ref)?), spec.components);
    let reference_traj = run(spec, &fine, nt_ref, opts)?;
    coarse
        .par_iter()
        .map(|&(n, nt)| {
            let space = FemSpace::new(Arc::new(unit_mesh(spec.dimension, n)?), spec.components);
            let traj = run(spec, &space, nt, opts)?;
            let prolonged = traj
                .states
                .iter()
                .map(|u| fine.prolong(&space, u).map(|p| p.values))
                .collect::<Result<Vec<_>>>()?;
            let sq_error = time_trapezoid(&traj, |k, lambda, t| {
                let reference_now = reference_traj.interpolate(t);
                let diff: Vec<f64> = if k == 0 {
                    prolonged[0].iter().zip(&reference_now).map(|(a, b)| a - b).collect()
                } else {
                    prolonged[k - 1]
                        .iter()
                        .zip(&prolonged[k])
                        .zip(&reference_now)
                        .map(|((a, b), r)| (1.0 - lambda) * a + lambda * b - r)
                        .collect()
                };
                Ok(l2(&fine, &diff).powi(2) + h1_semi(&fine, &diff).powi(2))
            })?;
            Ok(SweepCell { n_space: n, n_time: nt, h: space.h(), tau: traj.tau(), sq_error })
        })
        .collect()
}

/// [`self_reference_errors`] with the reference at least 4 times finer in `h` and `tau`
/// than the finest coarse level, fitted in `h`.
pub fn self_reference(
    spec: &ProblemSpec,
    coarse: &[(usize, usize)],
    reference: (usize, usize),
    opts: &StepOptions,
) -> Result<SelfReference> {
    if coarse.len() < 3 {
        return Err(Error::InsufficientLevels(coarse.len()));
    }
    let finest_n = coarse.iter().map(|c| c.0).max().unwrap_or(0);
    let finest_nt = coarse.iter().map(|c| c.1).max().unwrap_or(0);
    if reference.0 < 4 * finest_n || reference.1 < 4 * finest_nt {
        return Err(invalid("reference level must be at least 4 times finer in h and tau"));
    }
    let cells = self_reference_errors(spec, coarse, reference, opts)?;
    let fit = RateFit::fit(cells.iter().map(|c| (c.h, c.sq_error)).collect())?;
    Ok(SelfReference { cells, fit })
}
