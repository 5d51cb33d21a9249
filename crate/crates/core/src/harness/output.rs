use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::fem::FemSpace;
use crate::harness::{RateFit, SweepCell};
use crate::rothe::{InitialStability, Trajectory};

/// One line of a `verify` suite CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub level: usize,
    pub h: f64,
    pub tau: f64,
    pub measured: f64,
    pub bound_or_trend: f64,
    pub pass: bool,
}

/// CSV with header `level,h,tau,measured,bound_or_trend,pass`.
pub fn suite_csv(rows: &[SuiteRow]) -> String {
    let mut out = String::from("level,h,tau,measured,bound_or_trend,pass\n");
    for r in rows {
        let _ = writeln!(out, "{},{:.12e},{:.12e},{:.12e},{:.12e},{}", r.level, r.h, r.tau, r.measured, r.bound_or_trend, r.pass);
    }
    out
}

/// CSV with header `level,h,tau,sq_error,slope,pass`; slope and verdict belong to the fit.
pub fn sweep_csv(cells: &[SweepCell], fit: &RateFit, pass: bool) -> String {
    let mut out = String::from("level,h,tau,sq_error,slope,pass\n");
    for (i, c) in cells.iter().enumerate() {
        let _ = writeln!(out, "{},{:.12e},{:.12e},{:.12e},{:.6},{}", i, c.h, c.tau, c.sq_error, fit.slope, pass);
    }
    out
}

/// Two-column gnuplot data `parameter sq_error`.
pub fn plot_data(points: &[(f64, f64)], parameter: &str) -> String {
    let mut out = format!("# {parameter} sq_error\n");
    for (p, e) in points {
        let _ = writeln!(out, "{p:.12e} {e:.12e}");
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateSummary {
    pub step: usize,
    pub iterations: usize,
    pub residual: f64,
    pub el_violation: f64,
    pub decreased: bool,
}

/// Description of a persisted trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub dimension: usize,
    pub components: usize,
    pub n_space: usize,
    pub n_time: usize,
    pub horizon: f64,
    pub h: f64,
    pub tau: f64,
    pub checkpoints: Vec<(usize, f64, String)>,
    pub initial_stability: InitialStability,
    pub certificates: Vec<CertificateSummary>,
    pub seconds: f64,
}

/// Writes `state_<k>.csv` (vertex coordinates and values, boundary included) for the initial
/// state and `checkpoints` evenly spaced steps, plus `manifest.json`.
pub fn write_trajectory(
    dir: &Path,
    space: &FemSpace,
    traj: &Trajectory,
    n_space: usize,
    checkpoints: usize,
    seconds: f64,
) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let n = traj.num_steps();
    let mut steps: Vec<usize> = (0..=checkpoints.min(n)).map(|i| i * n / checkpoints.clamp(1, n)).collect();
    steps.dedup();
    let mesh = space.mesh();
    let (d, m) = (space.dim(), space.components());
    let mut written = Vec::with_capacity(steps.len());
    for &k in &steps {
        let full = space.extend(&traj.states[k].values);
        let mut text = String::new();
        let coords = ["x", "y"];
        let mut header: Vec<String> = coords[..d].iter().map(|s| s.to_string()).collect();
        header.extend((0..m).map(|a| format!("u{a}")));
        let _ = writeln!(text, "{}", header.join(","));
        for v in 0..mesh.num_vertices() {
            let mut row: Vec<String> = mesh.vertex(v).iter().map(|x| format!("{x:.12e}")).collect();
            row.extend(full[v * m..(v + 1) * m].iter().map(|u| format!("{u:.12e}")));
            let _ = writeln!(text, "{}", row.join(","));
        }
        let name = format!("state_{k:06}.csv");
        fs::write(dir.join(&name), text)?;
        written.push((k, traj.times[k], name));
    }
    let manifest = Manifest {
        dimension: d,
        components: m,
        n_space,
        n_time: n,
        horizon: traj.horizon(),
        h: space.h(),
        tau: traj.tau(),
        checkpoints: written,
        initial_stability: traj.initial_stability,
        certificates: traj
            .certificates
            .iter()
            .enumerate()
            .map(|(i, c)| CertificateSummary {
                step: i + 1,
                iterations: c.iterations,
                residual: c.residual,
                el_violation: c.el_violation,
                decreased: c.decreased,
            })
            .collect(),
        seconds,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}
