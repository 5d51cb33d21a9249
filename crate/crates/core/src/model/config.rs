//! JSON problem definitions built from named presets.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::dissipation::{AbsDissipation, DissipationPotential, L1Dissipation};
use crate::model::energy::{DoubleWell, EnergyDensity, PowerEnergy, QuadraticEnergy};
use crate::model::force::{ForceField, InitialDatum, Profile, ProfileDatum, RampForce, RoughForce, ZeroForce};
use crate::model::problem::ProblemSpec;
use crate::model::tensor::{DiagonalTensor, EllipticTensor, IsotropicTensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DissipationConfig {
    Abs { scale: f64 },
    L1 { scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnergyConfig {
    Quadratic { stiffness: f64 },
    DoubleWell { gamma: f64 },
    Power { exponent: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TensorConfig {
    Isotropic {
        #[serde(default = "one")]
        base: f64,
        #[serde(default)]
        time_slope: f64,
    },
    Diagonal {
        coefficients: Vec<f64>,
        #[serde(default)]
        variation: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForceConfig {
    Zero,
    Ramp {
        slope: f64,
        #[serde(default)]
        profile: Profile,
        #[serde(default)]
        direction: Option<Vec<f64>>,
    },
    Rough {
        exponent: f64,
        amplitude: f64,
        #[serde(default)]
        profile: Profile,
        #[serde(default)]
        direction: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialConfig {
    Zero,
    SineBump {
        amplitude: f64,
        #[serde(default)]
        direction: Option<Vec<f64>>,
    },
}

fn one() -> f64 {
    1.0
}

fn default_components() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub dissipation: DissipationConfig,
    pub energy: EnergyConfig,
    pub tensor: TensorConfig,
    pub force: ForceConfig,
    pub initial: InitialConfig,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub d: usize,
    #[serde(default = "default_components")]
    pub m: usize,
    #[serde(default)]
    pub bypass_admissibility: bool,
}

fn direction(dir: &Option<Vec<f64>>, m: usize) -> Result<Vec<f64>> {
    match dir {
        None => {
            let mut e = vec![0.0; m];
            e[0] = 1.0;
            Ok(e)
        }
        Some(v) if v.len() == m => Ok(v.clone()),
        Some(v) => Err(invalid(format!("direction has {} entries, expected {m}", v.len()))),
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// The built-in problem with closed-form solution.
    pub fn exact_1d() -> Self {
        Self {
            dissipation: DissipationConfig::Abs { scale: 1.0 },
            energy: EnergyConfig::Quadratic { stiffness: 1.0 },
            tensor: TensorConfig::Isotropic { base: 1.0, time_slope: 0.0 },
            force: ForceConfig::Ramp { slope: 1.0, profile: Profile::Uniform, direction: None },
            initial: InitialConfig::Zero,
            horizon: 2.0,
            d: 1,
            m: 1,
            bypass_admissibility: false,
        }
    }

    pub fn build(&self) -> Result<ProblemSpec> {
        let m = self.m;
        let d = self.d;
        if m == 0 {
            return Err(invalid("m must be at least 1"));
        }
        if !(1..=2).contains(&d) {
            return Err(invalid(format!("d must be 1 or 2, got {d}")));
        }
        let dissipation: Arc<dyn DissipationPotential> = match self.dissipation {
            DissipationConfig::Abs { scale } => Arc::new(AbsDissipation { scale: positive("scale", scale)? }),
            DissipationConfig::L1 { scale } => {
                Arc::new(L1Dissipation { scale: positive("scale", scale)?, components: m })
            }
        };
        let energy: Arc<dyn EnergyDensity> = match self.energy {
            EnergyConfig::Quadratic { stiffness } => {
                Arc::new(QuadraticEnergy { stiffness: positive("stiffness", stiffness)? })
            }
            EnergyConfig::DoubleWell { gamma } => Arc::new(DoubleWell { gamma: positive("gamma", gamma)? }),
            EnergyConfig::Power { exponent } => {
                if !(exponent >= 2.0 && exponent.is_finite()) {
                    return Err(invalid(format!("power exponent must be >= 2, got {exponent}")));
                }
                Arc::new(PowerEnergy { exponent })
            }
        };
        let tensor: Arc<dyn EllipticTensor> = match &self.tensor {
            TensorConfig::Isotropic { base, time_slope } => {
                if *time_slope < 0.0 {
                    return Err(invalid("isotropic tensor time_slope must be nonnegative"));
                }
                Arc::new(IsotropicTensor {
                    base: positive("base", *base)?,
                    time_slope: *time_slope,
                    components: m,
                    dimension: d,
                })
            }
            TensorConfig::Diagonal { coefficients, variation } => {
                if coefficients.len() != d {
                    return Err(invalid("diagonal tensor needs one coefficient per space dimension"));
                }
                for &c in coefficients {
                    positive("coefficient", c)?;
                }
                if *variation <= -1.0 {
                    return Err(invalid("diagonal tensor variation must exceed -1"));
                }
                Arc::new(DiagonalTensor { coefficients: coefficients.clone(), variation: *variation, components: m })
            }
        };
        let force: Arc<dyn ForceField> = match &self.force {
            ForceConfig::Zero => Arc::new(ZeroForce { components: m }),
            ForceConfig::Ramp { slope, profile, direction: dir } => {
                Arc::new(RampForce { slope: *slope, profile: *profile, direction: direction(dir, m)? })
            }
            ForceConfig::Rough { exponent, amplitude, profile, direction: dir } => {
                if !(*exponent > 0.0 && *exponent < 1.0) {
                    return Err(invalid("rough force exponent must lie in (0, 1)"));
                }
                Arc::new(RoughForce {
                    exponent: *exponent,
                    amplitude: *amplitude,
                    profile: *profile,
                    direction: direction(dir, m)?,
                })
            }
        };
        let initial: Arc<dyn InitialDatum> = match &self.initial {
            InitialConfig::Zero => Arc::new(ProfileDatum::zero(m)),
            InitialConfig::SineBump { amplitude, direction: dir } => Arc::new(ProfileDatum {
                amplitude: *amplitude,
                profile: Profile::SineBump,
                direction: direction(dir, m)?,
            }),
        };
        let spec = ProblemSpec {
            dissipation,
            energy,
            tensor,
            force,
            initial,
            horizon: positive("T", self.horizon)?,
            dimension: d,
            components: m,
            poincare_constant: None,
            bypass_admissibility: self.bypass_admissibility,
        };
        spec.validate_shape()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_named_presets() {
        let text = r#"{
            "dissipation": {"kind": "abs", "scale": 1.0},
            "energy": {"kind": "double_well", "gamma": 0.1},
            "tensor": {"kind": "isotropic"},
            "force": {"kind": "rough", "exponent": 0.4, "amplitude": 2.0, "profile": {"kind": "sine_bump"}},
            "initial": {"kind": "zero"},
            "T": 1.5,
            "d": 2
        }"#;
        let cfg = ProblemConfig::from_json(text).unwrap();
        let spec = cfg.build().unwrap();
        assert_eq!(spec.dimension, 2);
        assert_eq!(spec.components, 1);
        assert_eq!(spec.energy.monotonicity_modulus(), 0.4);
        assert!((spec.force.time_rate() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = ProblemConfig::exact_1d();
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"T\":2.0"));
        assert_eq!(ProblemConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut cfg = ProblemConfig::exact_1d();
        cfg.energy = EnergyConfig::DoubleWell { gamma: -1.0 };
        assert!(cfg.build().is_err());
        let mut cfg = ProblemConfig::exact_1d();
        cfg.d = 3;
        assert!(cfg.build().is_err());
        let mut cfg = ProblemConfig::exact_1d();
        cfg.force = ForceConfig::Ramp { slope: 1.0, profile: Profile::Uniform, direction: Some(vec![1.0, 0.0]) };
        assert!(cfg.build().is_err());
        assert!(ProblemConfig::from_json("{\"energy\": 3}").is_err());
    }
}
