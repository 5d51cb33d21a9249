use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::increment::StepOptions;
use crate::model::ProblemConfig;

/// Diagnostic suite of the `verify` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Coercivity,
    Time,
    Sobolev,
    Holder,
    Uniqueness,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [Suite::Coercivity, Suite::Time, Suite::Sobolev, Suite::Holder, Suite::Uniqueness];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Coercivity => "coercivity",
            Suite::Time => "time",
            Suite::Sobolev => "sobolev",
            Suite::Holder => "holder",
            Suite::Uniqueness => "uniqueness",
            Suite::All => "all",
        }
    }

    /// `All` expands to every suite.
    pub fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => Suite::EACH.to_vec(),
            s => vec![s],
        }
    }
}

fn default_n_space() -> usize {
    64
}

fn default_n_time() -> usize {
    1000
}

fn default_seed() -> u64 {
    0x5eed
}

fn default_checkpoints() -> usize {
    10
}

/// Problem description plus discretization and output settings, read from one JSON file.
/// Problem keys sit at the top level; solver options live under `"increment"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub increment: StepOptions,
    #[serde(default = "default_n_space")]
    pub n_space: usize,
    #[serde(default = "default_n_time")]
    pub n_time: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub suites: Vec<Suite>,
    /// Number of evenly spaced states written besides the initial one.
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
}

impl RunConfig {
    pub fn new(problem: ProblemConfig) -> Self {
        Self {
            problem,
            increment: StepOptions::default(),
            n_space: default_n_space(),
            n_time: default_n_time(),
            seed: default_seed(),
            output: None,
            suites: Vec::new(),
            checkpoints: default_checkpoints(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_space < 2 {
            return Err(invalid(format!("n_space must be at least 2, got {}", self.n_space)));
        }
        if self.n_time < 1 {
            return Err(invalid("n_time must be at least 1"));
        }
        self.increment.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flattened_problem_with_solver_options() {
        let text = r#"{
            "dissipation": {"kind": "abs", "scale": 1.0},
            "energy": {"kind": "quadratic", "stiffness": 1.0},
            "tensor": {"kind": "isotropic"},
            "force": {"kind": "ramp", "slope": 1.0},
            "initial": {"kind": "zero"},
            "T": 2.0, "d": 1,
            "increment": {"tol": 1e-9},
            "n_space": 32, "n_time": 100,
            "suites": ["time", "all"]
        }"#;
        let cfg = RunConfig::from_json(text).unwrap();
        assert_eq!(cfg.increment.tol, 1e-9);
        assert_eq!(cfg.increment.max_iter, 100_000);
        assert_eq!((cfg.n_space, cfg.n_time, cfg.seed), (32, 100, 0x5eed));
        assert_eq!(cfg.suites, vec![Suite::Time, Suite::All]);
        assert_eq!(cfg.problem.horizon, 2.0);
        let back = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_levels() {
        let mut cfg = RunConfig::new(ProblemConfig::exact_1d());
        cfg.n_space = 1;
        assert!(cfg.validate().is_err());
        cfg.n_space = 4;
        cfg.increment.safety = 1.5;
        assert!(cfg.validate().is_err());
    }
}
