//! Rothe time loop on a uniform partition of `[0, T]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fem::{assemble_stiffness, elliptic_project_initial, h1_semi, l2, FemSpace, NodalField};
use crate::increment::{stiffness_bound, IncrementProblem, StepCertificate, StepOptions};
use crate::linalg::CsrMatrix;
use crate::mesh::poincare_constant;
use crate::model::{check_admissibility, ProblemSpec};

/// Tolerance factor on the inner tolerance for the discrete initial stability check.
pub const STABILITY_FACTOR: f64 = 100.0;

/// Outcome of the `k = 0` increment solved from the projected initial datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialStability {
    pub stable: bool,
    /// `||u - u_0||_{W^{1,2}}` between the `k = 0` minimizer and the projected datum.
    pub margin: f64,
    pub tolerance: f64,
}

/// Discrete evolution `u_0, ..., u_N` with its step certificates.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<NodalField>,
    /// Certificates of steps `1..=N`.
    pub certificates: Vec<StepCertificate>,
    pub initial_stability: InitialStability,
    pub space_id: u64,
}

impl Trajectory {
    pub fn num_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.num_steps()]
    }

    pub fn tau(&self) -> f64 {
        self.horizon() / self.num_steps() as f64
    }

    /// Piecewise affine interpolant, affine on `(t_{k-1}, t_k]` and exact at the grid.
    /// Times outside `[0, T]` are clamped.
    pub fn interpolate(&self, t: f64) -> Vec<f64> {
        let (k, lambda) = self.locate_time(t);
        if k == 0 {
            return self.states[0].values.clone();
        }
        let (a, b) = (&self.states[k - 1].values, &self.states[k].values);
        a.iter().zip(b).map(|(x, y)| (1.0 - lambda) * x + lambda * y).collect()
    }

    /// Step index `k >= 1` with `t` in `(t_{k-1}, t_k]` and the affine weight of `u_k`;
    /// `(0, 1)` for `t <= 0`.
    pub fn locate_time(&self, t: f64) -> (usize, f64) {
        let n = self.num_steps();
        if t <= self.times[0] {
            return (0, 1.0);
        }
        let k = self.times.partition_point(|&s| s < t).clamp(1, n);
        let (ta, tb) = (self.times[k - 1], self.times[k]);
        let lambda = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        (k, lambda)
    }

    /// `delta_k = (u_k - u_{k-1}) / tau`, with `delta_0 = 0`.
    pub fn difference_quotient(&self, k: usize) -> Vec<f64> {
        if k == 0 {
            return vec![0.0; self.states[0].len()];
        }
        let tau = self.times[k] - self.times[k - 1];
        self.states[k].values.iter().zip(&self.states[k - 1].values).map(|(b, a)| (b - a) / tau).collect()
    }

    /// Every step decreased its incremental functional.
    pub fn all_decreased(&self) -> bool {
        self.certificates.iter().all(|c| c.decreased)
    }
}

/// `||v||_{W^{1,2}}`.
pub fn w12_norm(space: &FemSpace, v: &[f64]) -> f64 {
    l2(space, v).hypot(h1_semi(space, v))
}

fn validate(spec: &ProblemSpec, space: &FemSpace) -> Result<()> {
    spec.validate_shape()?;
    if spec.components != space.components() || spec.dimension != space.dim() {
        return Err(Error::SpaceMismatch);
    }
    Ok(())
}

/// Checks the mild convexity gate with `C_P` from `space` when the spec does not carry one.
/// Inadmissible specs are rejected unless they bypass admissibility.
pub fn admit(spec: &ProblemSpec, space: &FemSpace) -> Result<()> {
    let mut spec = spec.clone();
    if spec.poincare_constant.is_none() {
        spec.poincare_constant = Some(poincare_constant(space)?);
    }
    let report = check_admissibility(&spec)?;
    if !report.passed() {
        if spec.bypass_admissibility {
            log::warn!("running an inadmissible problem: mu C_P^2 = {} >= kappa = {}", report.product, report.kappa);
            return Ok(());
        }
        return report.require();
    }
    if !report.all_checks_passed() {
        for c in report.checks.iter().filter(|c| !c.passed) {
            log::warn!("assumption check {} failed: {}", c.name, c.detail);
        }
    }
    Ok(())
}

/// Stiffness provider that assembles once for time-independent tensors.
struct StiffnessCache<'a> {
    space: &'a FemSpace,
    spec: &'a ProblemSpec,
    fixed: Option<(CsrMatrix, f64)>,
}

impl<'a> StiffnessCache<'a> {
    fn new(space: &'a FemSpace, spec: &'a ProblemSpec) -> Self {
        let fixed = spec.tensor.is_time_independent().then(|| {
            let k = assemble_stiffness(space, spec.tensor.as_ref(), 0.0);
            let k_max = stiffness_bound(&k);
            (k, k_max)
        });
        Self { space, spec, fixed }
    }

    fn problem(&self, t: f64) -> IncrementProblem<'_> {
        match &self.fixed {
            Some((k, k_max)) => IncrementProblem::with_stiffness(self.space, self.spec, t, k, *k_max),
            None => IncrementProblem::assemble(self.space, self.spec, t),
        }
    }
}

fn initial_stability(cache: &StiffnessCache, u0: &NodalField, opts: &StepOptions) -> Result<InitialStability> {
    let problem = cache.problem(0.0);
    let (u, _) = problem.solve(&u0.values, None, opts).map_err(|e| with_step(e, 0))?;
    let diff: Vec<f64> = u.iter().zip(&u0.values).map(|(a, b)| a - b).collect();
    let margin = w12_norm(cache.space, &diff);
    let tolerance = STABILITY_FACTOR * opts.tol;
    Ok(InitialStability { stable: margin <= tolerance, margin, tolerance })
}

/// Solves the `k = 0` increment from the projected initial datum and reports how far it moves.
pub fn check_initial_stability(spec: &ProblemSpec, space: &FemSpace, opts: &StepOptions) -> Result<InitialStability> {
    validate(spec, space)?;
    let u0 = elliptic_project_initial(space, spec.initial.as_ref(), spec.tensor.as_ref())?;
    initial_stability(&StiffnessCache::new(space, spec), &u0, opts)
}

fn with_step(e: Error, k: usize) -> Error {
    match e {
        Error::NoConvergence { iterations, residual, .. } => Error::NoConvergence { step: Some(k), iterations, residual },
        other => other,
    }
}

/// Runs `N` uniform steps on `[0, T]`.
pub fn run(spec: &ProblemSpec, space: &FemSpace, n_steps: usize, opts: &StepOptions) -> Result<Trajectory> {
    drive(spec, space, n_steps, opts, None)
}

/// Like [`run`], but every inner solve starts from `u_{k-1}` plus uniform noise of size
/// `magnitude` drawn from a generator seeded with `seed`.
pub fn run_perturbed(
    spec: &ProblemSpec,
    space: &FemSpace,
    n_steps: usize,
    opts: &StepOptions,
    magnitude: f64,
    seed: u64,
) -> Result<Trajectory> {
    if !(magnitude >= 0.0 && magnitude.is_finite()) {
        return Err(invalid(format!("perturbation must be nonnegative, got {magnitude}")));
    }
    drive(spec, space, n_steps, opts, Some((magnitude, seed)))
}

fn drive(
    spec: &ProblemSpec,
    space: &FemSpace,
    n_steps: usize,
    opts: &StepOptions,
    perturbation: Option<(f64, u64)>,
) -> Result<Trajectory> {
    if n_steps == 0 {
        return Err(invalid("at least one time step is required"));
    }
    opts.validate()?;
    validate(spec, space)?;
    admit(spec, space)?;
    let u0 = elliptic_project_initial(space, spec.initial.as_ref(), spec.tensor.as_ref())?;
    let cache = StiffnessCache::new(space, spec);
    let stability = initial_stability(&cache, &u0, opts)?;
    if !stability.stable {
        log::warn!(
            "initial datum is not discretely stable: the t = 0 increment moves it by {:e} (tolerance {:e})",
            stability.margin,
            stability.tolerance
        );
    }
    let mut rng = perturbation.map(|(_, seed)| ChaCha8Rng::seed_from_u64(seed));
    let times: Vec<f64> = (0..=n_steps).map(|k| spec.horizon * k as f64 / n_steps as f64).collect();
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut certificates = Vec::with_capacity(n_steps);
    states.push(NodalField { time: Some(0.0), ..u0 });
    for (k, &t) in times.iter().enumerate().skip(1) {
        let prev = &states[k - 1].values;
        let warm: Option<Vec<f64>> = match (perturbation, rng.as_mut()) {
            (Some((mag, _)), Some(r)) if mag > 0.0 => Some(prev.iter().map(|v| v + mag * r.gen_range(-1.0..=1.0)).collect()),
            _ => None,
        };
        let problem = cache.problem(t);
        let (u, cert) = problem.solve(prev, warm.as_deref(), opts).map_err(|e| with_step(e, k))?;
        if !cert.decreased {
            log::warn!("step {k} increased the incremental functional by {:e}", cert.objective_change);
        }
        states.push(space.field(u, Some(t))?);
        certificates.push(cert);
    }
    Ok(Trajectory { times, states, certificates, initial_stability: stability, space_id: space.id() })
}
