//! Command-line driver: trajectories, convergence sweeps, estimate suites and the scalar
//! double-well oracle.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::json;

use rate_independent::fem::FemSpace;
use rate_independent::harness::{
    exact_1d_solution, plot_data, run_suite, self_reference, suite_csv, sweep_and_fit, sweep_csv, unit_mesh,
    write_trajectory, RunConfig, Suite, SweepPlan,
};
use rate_independent::model::ProblemConfig;
use rate_independent::rothe::run;
use rate_independent::zero_dim::{
    energy_balance_residual, integrate, ScalarLoad, ScalarTrajectory, SolutionMode, Stepper,
};

#[derive(Parser)]
#[command(name = "ratind", version, about = "Rate-independent evolution: Rothe/P1 solver and verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one discretization level and write checkpoint states.
    Run {
        /// JSON configuration; the scalar exact problem when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n_space: Option<usize>,
        #[arg(long)]
        n_time: Option<usize>,
        /// Output directory; overrides the configured one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence sweep with log-log rate fits in h and tau.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = [16, 32, 64, 128])]
        h_levels: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [125, 250, 500, 1000])]
        tau_levels: Vec<usize>,
        /// Time level of the h-sweep.
        #[arg(long, default_value_t = 4000)]
        fixed_time: usize,
        /// Space level of the tau-sweep.
        #[arg(long, default_value_t = 256)]
        fixed_space: usize,
        /// Compare against a fine run `n,N` instead of the closed-form solution; coarse levels
        /// pair the h- and tau-levels.
        #[arg(long, value_delimiter = ',')]
        reference: Option<Vec<usize>>,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
    /// Measured a-priori estimates over three refinement levels.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "all")]
        suite: Vec<SuiteArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scalar double-well oracle: closed-form solutions or incremental steppers.
    ZeroDim {
        #[arg(long, value_enum)]
        mode: ZeroDimMode,
        #[arg(long, default_value_t = 1e-3)]
        tau: f64,
        #[arg(long, default_value_t = 2.0)]
        horizon: f64,
        /// CSV file `t,u`; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Coercivity,
    Time,
    Sobolev,
    Holder,
    Uniqueness,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Coercivity => Suite::Coercivity,
            SuiteArg::Time => Suite::Time,
            SuiteArg::Sobolev => Suite::Sobolev,
            SuiteArg::Holder => Suite::Holder,
            SuiteArg::Uniqueness => Suite::Uniqueness,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ZeroDimMode {
    Weak,
    Strong,
    Extended,
    Global,
    Local,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading {}", p.display())),
        None => Ok(RunConfig::new(ProblemConfig::exact_1d())),
    }
}

/// True when the problem is the scalar exact problem up to its horizon.
fn has_closed_form(problem: &ProblemConfig) -> bool {
    let mut reference = ProblemConfig::exact_1d();
    reference.horizon = problem.horizon;
    reference.bypass_admissibility = problem.bypass_admissibility;
    *problem == reference
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_run(config: Option<PathBuf>, n_space: Option<usize>, n_time: Option<usize>, out: Option<PathBuf>) -> Result<bool> {
    let mut cfg = load_config(config.as_deref())?;
    cfg.n_space = n_space.unwrap_or(cfg.n_space);
    cfg.n_time = n_time.unwrap_or(cfg.n_time);
    cfg.validate()?;
    let spec = cfg.problem.build()?;
    let space = FemSpace::new(Arc::new(unit_mesh(spec.dimension, cfg.n_space)?), spec.components);
    let start = Instant::now();
    let traj = run(&spec, &space, cfg.n_time, &cfg.increment)?;
    let seconds = start.elapsed().as_secs_f64();
    let iterations: usize = traj.certificates.iter().map(|c| c.iterations).sum();
    info!("{} steps, {} inner iterations, {:.2} s", traj.num_steps(), iterations, seconds);
    let summary = json!({
        "n_space": cfg.n_space,
        "n_time": cfg.n_time,
        "dofs": space.num_dofs(),
        "seconds": seconds,
        "inner_iterations": iterations,
        "max_el_violation": traj.certificates.iter().map(|c| c.el_violation).fold(0.0, f64::max),
        "all_decreased": traj.all_decreased(),
        "initially_stable": traj.initial_stability.stable,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    if let Some(dir) = out.or(cfg.output.clone()) {
        write_trajectory(&dir, &space, &traj, cfg.n_space, cfg.checkpoints, seconds)?;
        info!("wrote {}", dir.display());
    }
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    config: Option<PathBuf>,
    h_levels: Vec<usize>,
    tau_levels: Vec<usize>,
    fixed_time: usize,
    fixed_space: usize,
    reference: Option<Vec<usize>>,
    out: PathBuf,
) -> Result<bool> {
    let cfg = load_config(config.as_deref())?;
    let spec = cfg.problem.build()?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    if let Some(r) = reference {
        if r.len() != 2 {
            bail!("--reference takes two values n,N");
        }
        let coarse: Vec<(usize, usize)> = h_levels.iter().copied().zip(tau_levels.iter().copied()).collect();
        let result = self_reference(&spec, &coarse, (r[0], r[1]), &cfg.increment)?;
        let pass = result.fit.passes(1.0);
        write(&out.join("self_reference.csv"), &sweep_csv(&result.cells, &result.fit, pass))?;
        write(&out.join("self_reference.dat"), &plot_data(&result.fit.points, "h"))?;
        println!("self-reference h slope {:.4} ({})", result.fit.slope, verdict(pass));
        return Ok(pass);
    }
    if !has_closed_form(&cfg.problem) {
        bail!("no closed-form solution for this problem; pass --reference n,N");
    }
    let plan = SweepPlan::new(h_levels, tau_levels).with_fixed(fixed_space, fixed_time);
    let result = sweep_and_fit(&spec, &exact_1d_solution, &plan, &cfg.increment)?;
    let (h_pass, tau_pass) = (result.h_pass(), result.tau_pass());
    write(&out.join("h_sweep.csv"), &sweep_csv(&result.h_cells, &result.h_fit, h_pass))?;
    write(&out.join("tau_sweep.csv"), &sweep_csv(&result.tau_cells, &result.tau_fit, tau_pass))?;
    write(&out.join("h_sweep.dat"), &plot_data(&result.h_fit.points, "h"))?;
    write(&out.join("tau_sweep.dat"), &plot_data(&result.tau_fit.points, "tau"))?;
    println!("h slope {:.4} (needs {:.2}, {})", result.h_fit.slope, 0.9 * result.h_exponent, verdict(h_pass));
    println!("tau slope {:.4} (needs {:.2}, {})", result.tau_fit.slope, 0.9 * result.tau_exponent, verdict(tau_pass));
    Ok(h_pass && tau_pass)
}

fn cmd_verify(config: Option<PathBuf>, suites: Vec<SuiteArg>, out: Option<PathBuf>) -> Result<bool> {
    let cfg = load_config(config.as_deref())?;
    let mut requested: Vec<Suite> = suites.into_iter().map(Suite::from).collect();
    if !cfg.suites.is_empty() && requested == [Suite::All] {
        requested = cfg.suites.clone();
    }
    let tables = run_suite(&requested, &cfg)?;
    let out = out.or(cfg.output.clone());
    if let Some(dir) = &out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut all = true;
    for (suite, rows) in &tables {
        let pass = rows.iter().all(|r| r.pass);
        all &= pass;
        println!("{}: {}", suite.name(), verdict(pass));
        for r in rows {
            println!("  level {} h {:.4e} tau {:.4e} measured {:.6e} bound/trend {:.6e}", r.level, r.h, r.tau, r.measured, r.bound_or_trend);
        }
        if let Some(dir) = &out {
            write(&dir.join(format!("{}.csv", suite.name())), &suite_csv(rows))?;
        }
    }
    Ok(all)
}

fn cmd_zero_dim(mode: ZeroDimMode, tau: f64, horizon: f64, out: Option<PathBuf>) -> Result<bool> {
    if !(tau > 0.0 && tau < horizon) {
        bail!("tau must lie in (0, horizon)");
    }
    let traj = match mode {
        ZeroDimMode::Weak | ZeroDimMode::Strong | ZeroDimMode::Extended => {
            let m = match mode {
                ZeroDimMode::Weak => SolutionMode::Weak,
                ZeroDimMode::Strong => SolutionMode::Strong,
                _ => SolutionMode::Extended,
            };
            ScalarTrajectory::sample_exact(m, horizon, (horizon / tau).round() as usize)?
        }
        ZeroDimMode::Global => integrate(Stepper::Global, -1.0, tau, horizon)?,
        ZeroDimMode::Local => integrate(Stepper::Local, -1.0, tau, horizon)?,
    };
    if matches!(mode, ZeroDimMode::Global | ZeroDimMode::Local) {
        info!("L1 error against the {:?} solution: {:.3e}", traj.mode, traj.l1_error(traj.mode)?);
    }
    info!("energy balance residual: {:.3e}", energy_balance_residual(&traj, ScalarLoad::ramp()));
    let mut csv = String::from("t,u\n");
    for (t, u) in traj.times.iter().zip(&traj.values) {
        csv.push_str(&format!("{t:.12e},{u:.12e}\n"));
    }
    match out {
        Some(p) => write(&p, &csv)?,
        None => print!("{csv}"),
    }
    Ok(true)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, n_space, n_time, out } => cmd_run(config, n_space, n_time, out),
        Command::Sweep { config, h_levels, tau_levels, fixed_time, fixed_space, reference, out } => {
            cmd_sweep(config, h_levels, tau_levels, fixed_time, fixed_space, reference, out)
        }
        Command::Verify { config, suite, out } => cmd_verify(config, suite, out),
        Command::ZeroDim { mode, tau, horizon, out } => cmd_zero_dim(mode, tau, horizon, out),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
