//! Continuous problem data and the checks of its standing assumptions.

pub mod config;
pub mod dissipation;
pub mod energy;
pub mod force;
pub mod problem;
pub mod tensor;

pub use config::ProblemConfig;
pub use dissipation::{builtin_abs_dissipation, AbsDissipation, DissipationPotential, L1Dissipation};
pub use energy::{builtin_double_well, DoubleWell, EnergyDensity, PowerEnergy, QuadraticEnergy};
pub use force::{ForceField, InitialDatum, Profile, ProfileDatum, RampForce, RoughForce, ZeroForce};
pub use problem::{
    check_admissibility, check_admissibility_with, AdmissibilityOptions, AdmissibilityReport, AssumptionCheck,
    ProblemSpec,
};
pub use tensor::{tensor_index, DiagonalTensor, EllipticTensor, IsotropicTensor};

/// Euclidean norm of a small vector.
#[inline]
pub fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
