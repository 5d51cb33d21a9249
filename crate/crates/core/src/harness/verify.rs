use std::sync::Arc;

use rayon::prelude::*;

use crate::error::Result;
use crate::estimates::{
    holder_seminorm, uniqueness_probe, verify_coercivity, verify_discrete_sobolev, verify_time_derivative_bound,
    HOLDER_EXPONENT, HOLDER_SAMPLES,
};
use crate::fem::FemSpace;
use crate::harness::{unit_mesh, RunConfig, Suite, SuiteRow};
use crate::model::ProblemSpec;
use crate::rothe::{run, Trajectory};

/// Refinement levels of a suite: `(n 2^i, N 2^i)` for `i = 0, 1, 2`.
const LEVELS: usize = 3;
const SOBOLEV_TRIALS: usize = 200;
const UNIQUENESS_PERTURBATION: f64 = 1e-3;

fn family(cfg: &RunConfig) -> Vec<(usize, usize)> {
    (0..LEVELS).map(|i| (cfg.n_space << i, cfg.n_time << i)).collect()
}

fn trajectories(spec: &ProblemSpec, cfg: &RunConfig) -> Result<Vec<(FemSpace, Trajectory)>> {
    family(cfg)
        .par_iter()
        .map(|&(n, nt)| {
            let space = FemSpace::new(Arc::new(unit_mesh(spec.dimension, n)?), spec.components);
            let traj = run(spec, &space, nt, &cfg.increment)?;
            Ok((space, traj))
        })
        .collect()
}

fn rows(levels: &[(f64, f64)], measured: &[f64], trend: &[f64], pass: impl Fn(usize) -> bool) -> Vec<SuiteRow> {
    (0..measured.len())
        .map(|i| SuiteRow {
            level: i,
            h: levels[i].0,
            tau: levels[i].1,
            measured: measured[i],
            bound_or_trend: trend[i],
            pass: pass(i),
        })
        .collect()
}

/// Runs the requested suites on the configured problem over three refinement levels. Each
/// suite yields one row per level.
pub fn run_suite(suites: &[Suite], cfg: &RunConfig) -> Result<Vec<(Suite, Vec<SuiteRow>)>> {
    cfg.validate()?;
    let spec = cfg.problem.build()?;
    let mut wanted: Vec<Suite> = suites.iter().flat_map(|s| s.expand()).collect();
    wanted.sort();
    wanted.dedup();
    let needs_runs = wanted.iter().any(|s| matches!(s, Suite::Coercivity | Suite::Time | Suite::Holder));
    let runs = if needs_runs { trajectories(&spec, cfg)? } else { Vec::new() };
    let levels: Vec<(f64, f64)> = family(cfg)
        .iter()
        .map(|&(n, nt)| (1.0 / n as f64, spec.horizon / nt as f64))
        .collect();
    let mut out = Vec::new();
    for suite in wanted {
        let table = match suite {
            Suite::Coercivity => {
                let values = runs
                    .iter()
                    .map(|(s, t)| Ok(verify_coercivity(t, s, &spec)?.into_iter().fold(0.0, f64::max)))
                    .collect::<Result<Vec<f64>>>()?;
                let trend: Vec<f64> = values.iter().map(|v| relative(*v, values[0])).collect();
                rows(&levels, &values, &trend, |i| trend[i] < 0.2)
            }
            Suite::Time => {
                let bounds = runs
                    .iter()
                    .map(|(s, t)| verify_time_derivative_bound(t, s, &spec))
                    .collect::<Result<Vec<_>>>()?;
                let values: Vec<f64> = bounds.iter().map(|b| b.max_gradient).collect();
                let coefficients: Vec<f64> = bounds.iter().map(|b| b.bound_coefficient).collect();
                let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
                rows(&levels, &values, &coefficients, |i| values[i] <= 1.5 * min || values[i] == 0.0)
            }
            Suite::Holder => {
                let values = runs
                    .iter()
                    .map(|(s, t)| holder_seminorm(t, s, HOLDER_EXPONENT, HOLDER_SAMPLES))
                    .collect::<Result<Vec<f64>>>()?;
                let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
                let trend: Vec<f64> = values.iter().map(|v| if min > 0.0 { v / min } else { 1.0 }).collect();
                rows(&levels, &values, &trend, |i| trend[i] <= 1.25)
            }
            Suite::Sobolev => {
                let values = family(cfg)
                    .par_iter()
                    .map(|&(n, _)| {
                        let space = FemSpace::new(Arc::new(unit_mesh(spec.dimension, n)?), spec.components);
                        Ok(verify_discrete_sobolev(&space, spec.tensor.as_ref(), 0.0, SOBOLEV_TRIALS, cfg.seed)?.ratio)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let trend: Vec<f64> =
                    (0..values.len()).map(|i| if i == 0 { 0.0 } else { relative(values[i], values[i - 1]) }).collect();
                rows(&levels, &values, &trend, |i| trend[i] <= 0.1)
            }
            Suite::Uniqueness => {
                let bound = 100.0 * cfg.increment.tol;
                let values = family(cfg)
                    .par_iter()
                    .map(|&(n, nt)| {
                        let space = FemSpace::new(Arc::new(unit_mesh(spec.dimension, n)?), spec.components);
                        uniqueness_probe(&spec, &space, nt, UNIQUENESS_PERTURBATION, &cfg.increment, cfg.seed)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                rows(&levels, &values, &vec![bound; values.len()], |i| values[i] <= bound)
            }
            Suite::All => continue,
        };
        out.push((suite, table));
    }
    Ok(out)
}

fn relative(v: f64, base: f64) -> f64 {
    if base > 0.0 {
        v / base - 1.0
    } else if v > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProblemConfig;

    #[test]
    fn small_family_passes_all_suites() {
        let mut cfg = RunConfig::new(ProblemConfig::exact_1d());
        cfg.n_space = 8;
        cfg.n_time = 20;
        let tables = run_suite(&[Suite::All], &cfg).unwrap();
        assert_eq!(tables.len(), 5);
        for (suite, rows) in &tables {
            assert_eq!(rows.len(), LEVELS, "{suite:?}");
            for r in rows {
                assert!(r.measured.is_finite() && r.measured >= 0.0, "{suite:?} {r:?}");
            }
        }
        let uniq = &tables.iter().find(|t| t.0 == Suite::Uniqueness).unwrap().1;
        assert!(uniq.iter().all(|r| r.pass));
    }
}
