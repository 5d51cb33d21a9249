use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::dissipation::{AbsDissipation, DissipationPotential};
use crate::model::energy::{DoubleWell, EnergyDensity, QuadraticEnergy};
use crate::model::force::{ForceField, InitialDatum, Profile, ProfileDatum, RampForce, ZeroForce};
use crate::model::tensor::{tensor_index, EllipticTensor, IsotropicTensor};
use crate::model::euclid;

/// Complete continuous problem on the unit interval or unit square.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub dissipation: Arc<dyn DissipationPotential>,
    pub energy: Arc<dyn EnergyDensity>,
    pub tensor: Arc<dyn EllipticTensor>,
    pub force: Arc<dyn ForceField>,
    pub initial: Arc<dyn InitialDatum>,
    pub horizon: f64,
    pub dimension: usize,
    pub components: usize,
    /// `C_P(Omega)`, usually from [`crate::mesh::poincare_constant`].
    pub poincare_constant: Option<f64>,
    /// Allows runs on specs that fail the mild convexity condition.
    pub bypass_admissibility: bool,
}

impl ProblemSpec {
    /// Scalar problem with `R1 = |.|`, `W0 = u^2/2`, `A = 1`, `f = t`, `u0 = 0` on `(0, 1)`,
    /// whose solution is `max(t - 1, 0) phi(x)`.
    pub fn exact_1d(horizon: f64) -> Self {
        Self {
            dissipation: Arc::new(AbsDissipation { scale: 1.0 }),
            energy: Arc::new(QuadraticEnergy { stiffness: 1.0 }),
            tensor: Arc::new(IsotropicTensor::identity(1, 1)),
            force: Arc::new(RampForce { slope: 1.0, profile: Profile::Uniform, direction: vec![1.0] }),
            initial: Arc::new(ProfileDatum::zero(1)),
            horizon,
            dimension: 1,
            components: 1,
            poincare_constant: None,
            bypass_admissibility: false,
        }
    }

    /// Scalar double-well problem with unit tensor and zero force on the unit cube of
    /// dimension `d`.
    pub fn double_well(gamma: f64, dimension: usize) -> Self {
        Self {
            dissipation: Arc::new(AbsDissipation { scale: 1.0 }),
            energy: Arc::new(DoubleWell { gamma }),
            tensor: Arc::new(IsotropicTensor::identity(1, dimension)),
            force: Arc::new(ZeroForce { components: 1 }),
            initial: Arc::new(ProfileDatum::zero(1)),
            horizon: 1.0,
            dimension,
            components: 1,
            poincare_constant: None,
            bypass_admissibility: false,
        }
    }

    pub fn with_force(mut self, force: Arc<dyn ForceField>) -> Self {
        self.force = force;
        self
    }

    pub fn with_initial(mut self, initial: Arc<dyn InitialDatum>) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_poincare_constant(mut self, cp: f64) -> Self {
        self.poincare_constant = Some(cp);
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn bypassing_admissibility(mut self) -> Self {
        self.bypass_admissibility = true;
        self
    }

    /// `kappa - mu C_P^2`, if `C_P` is known.
    pub fn convexity_margin(&self) -> Option<f64> {
        self.poincare_constant.map(|cp| {
            self.tensor.ellipticity() - self.energy.monotonicity_modulus() * cp * cp
        })
    }

    pub(crate) fn validate_shape(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(1..=2).contains(&self.dimension) {
            return Err(invalid(format!("dimension must be 1 or 2, got {}", self.dimension)));
        }
        if self.components == 0
            || self.tensor.components() != self.components
            || self.force.components() != self.components
        {
            return Err(invalid("component counts of tensor, force and spec disagree"));
        }
        if self.tensor.dimension() != self.dimension {
            return Err(invalid("tensor dimension disagrees with spec dimension"));
        }
        Ok(())
    }
}

/// Sampling settings for [`check_admissibility_with`].
#[derive(Debug, Clone, Copy)]
pub struct AdmissibilityOptions {
    /// Half-width of the cube `[-r, r]^m` used for energy samples.
    pub box_radius: f64,
    pub energy_samples: usize,
    pub pair_samples: usize,
    pub dissipation_samples: usize,
    pub tensor_samples: usize,
    pub seed: u64,
}

impl Default for AdmissibilityOptions {
    fn default() -> Self {
        Self {
            box_radius: 10.0,
            energy_samples: 2_000,
            pair_samples: 10_000,
            dissipation_samples: 1_000,
            tensor_samples: 200,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed slack; negative when violated.
    pub margin: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub kappa: f64,
    pub mu: f64,
    pub poincare_constant: f64,
    /// `mu C_P^2`.
    pub product: f64,
    /// `kappa - mu C_P^2`.
    pub margin: f64,
    pub checks: Vec<AssumptionCheck>,
}

impl AdmissibilityReport {
    /// Mild convexity `mu C_P^2 < kappa`; the only hard gate.
    pub fn passed(&self) -> bool {
        self.margin > 0.0
    }

    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn require(&self) -> Result<()> {
        if self.passed() {
            Ok(())
        } else {
            Err(Error::Inadmissible { product: self.product, kappa: self.kappa, margin: self.margin })
        }
    }
}

pub fn check_admissibility(spec: &ProblemSpec) -> Result<AdmissibilityReport> {
    check_admissibility_with(spec, &AdmissibilityOptions::default())
}

fn finite(what: &'static str, value: f64, sample: &[f64]) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteEvaluation { what, sample: sample.to_vec() })
    }
}

fn finite_all(what: &'static str, values: &[f64], sample: &[f64]) -> Result<()> {
    for &v in values {
        finite(what, v, sample)?;
    }
    Ok(())
}

/// Sampled validation of the standing assumptions plus the mild convexity margin.
///
/// The lower growth bound is tested as `|v|^q / C - C <= W0(v)`.
pub fn check_admissibility_with(spec: &ProblemSpec, opts: &AdmissibilityOptions) -> Result<AdmissibilityReport> {
    spec.validate_shape()?;
    let cp = spec
        .poincare_constant
        .ok_or_else(|| invalid("Poincare constant must be computed before the admissibility check"))?;
    let m = spec.components;
    let d = spec.dimension;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let r = opts.box_radius;
    let sample_v = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..m).map(|_| rng.gen_range(-r..=r)).collect() };
    let mut checks = Vec::new();

    // dissipation
    {
        let r1 = spec.dissipation.as_ref();
        let mut worst: f64 = f64::INFINITY;
        let zero = vec![0.0; m];
        let r0 = finite("R1", r1.evaluate(&zero), &zero)?;
        worst = worst.min(-r0.abs());
        let mut pa = vec![0.0; m];
        let mut pb = vec![0.0; m];
        for _ in 0..opts.dissipation_samples {
            let a = sample_v(&mut rng);
            let b = sample_v(&mut rng);
            let alpha: f64 = rng.gen_range(0.0..10.0);
            let lambda: f64 = rng.gen_range(0.01..5.0);
            let ra = finite("R1", r1.evaluate(&a), &a)?;
            let rb = finite("R1", r1.evaluate(&b), &b)?;
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let rs = finite("R1", r1.evaluate(&sum), &sum)?;
            let scaled: Vec<f64> = a.iter().map(|x| alpha * x).collect();
            let rsc = finite("R1", r1.evaluate(&scaled), &scaled)?;
            let tol = 1e-12 * (1.0 + ra + rb + alpha * ra);
            worst = worst.min(tol - (rsc - alpha * ra).abs());
            worst = worst.min(ra + rb + tol - rs);
            worst = worst.min(ra);
            r1.prox(&a, lambda, &mut pa);
            r1.prox(&b, lambda, &mut pb);
            finite_all("prox", &pa, &a)?;
            let dp: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x - y).collect();
            let dx: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            worst = worst.min(euclid(&dx) * (1.0 + 1e-12) - euclid(&dp));
        }
        checks.push(AssumptionCheck {
            name: "dissipation",
            passed: worst >= 0.0,
            margin: worst,
            detail: format!("homogeneity, subadditivity, nonnegativity, prox nonexpansive ({})", r1.describe()),
        });
    }

    // energy growth, gradient growth and finite-difference consistency
    {
        let w = spec.energy.as_ref();
        let q = w.growth_exponent();
        let c = w.growth_constant();
        let mut lower: f64 = f64::INFINITY;
        let mut upper: f64 = f64::INFINITY;
        let mut grad_growth: f64 = f64::INFINITY;
        let mut fd_worst: f64 = 0.0;
        let mut g = vec![0.0; m];
        let h = 1e-5;
        for _ in 0..opts.energy_samples {
            let v = sample_v(&mut rng);
            let n = euclid(&v);
            let wv = finite("W0", w.value(&v), &v)?;
            w.gradient(&v, &mut g);
            finite_all("DW0", &g, &v)?;
            let nq = n.powf(q);
            lower = lower.min(wv - (nq / c - c));
            upper = upper.min(c * (nq + 1.0) - wv);
            grad_growth = grad_growth.min(c * (1.0 + n.powf(q - 1.0)) - euclid(&g));
            for a in 0..m {
                let mut p = v.clone();
                let mut s = v.clone();
                p[a] += h;
                s[a] -= h;
                let fd = (w.value(&p) - w.value(&s)) / (2.0 * h);
                fd_worst = fd_worst.max((fd - g[a]).abs() / g[a].abs().max(1.0));
            }
        }
        checks.push(AssumptionCheck {
            name: "energy_growth",
            passed: lower >= -1e-12 && upper >= -1e-12,
            margin: lower.min(upper),
            detail: format!("q = {q}, C = {c} ({})", w.describe()),
        });
        checks.push(AssumptionCheck {
            name: "gradient_growth",
            passed: grad_growth >= -1e-12,
            margin: grad_growth,
            detail: format!("|DW0| <= C (1 + |v|^(q-1)), C = {c}"),
        });
        checks.push(AssumptionCheck {
            name: "gradient_consistency",
            passed: fd_worst <= 1e-6,
            margin: 1e-6 - fd_worst,
            detail: format!("max relative central-difference error {fd_worst:e}"),
        });

        let mu = w.monotonicity_modulus();
        let mut worst_ratio = f64::INFINITY;
        let mut gv = vec![0.0; m];
        let mut gw = vec![0.0; m];
        for _ in 0..opts.pair_samples {
            let v = sample_v(&mut rng);
            let u = sample_v(&mut rng);
            w.gradient(&v, &mut gv);
            w.gradient(&u, &mut gw);
            let diff: Vec<f64> = v.iter().zip(&u).map(|(a, b)| a - b).collect();
            let dd = euclid(&diff);
            if dd < 1e-8 {
                continue;
            }
            let inner: f64 = gv.iter().zip(&gw).zip(&diff).map(|((a, b), c)| (a - b) * c).sum();
            worst_ratio = worst_ratio.min(inner / (dd * dd));
        }
        let slack = worst_ratio + mu;
        checks.push(AssumptionCheck {
            name: "semi_monotonicity",
            passed: slack >= -1e-9 * (1.0 + mu),
            margin: slack,
            detail: format!("declared mu = {mu}, worst sampled monotonicity ratio {worst_ratio:e}"),
        });
    }

    // tensor symmetry and ellipticity
    {
        let a = spec.tensor.as_ref();
        let kappa = a.ellipticity();
        let md = m * d;
        let mut buf = vec![0.0; md * md];
        let mut sym_err: f64 = 0.0;
        let mut ell_slack: f64 = f64::INFINITY;
        for _ in 0..opts.tensor_samples {
            let t = rng.gen_range(0.0..=spec.horizon);
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..=1.0)).collect();
            a.evaluate(t, &x, &mut buf);
            let mut sample = vec![t];
            sample.extend_from_slice(&x);
            finite_all("A", &buf, &sample)?;
            let mat = DMatrix::from_fn(md, md, |p, q| {
                let (al, i) = (p / d, p % d);
                let (be, j) = (q / d, q % d);
                buf[tensor_index(m, d, al, i, be, j)]
            });
            sym_err = sym_err.max((&mat - mat.transpose()).amax());
            let sym = (&mat + mat.transpose()) * 0.5;
            let min_eig = sym.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
            ell_slack = ell_slack.min(min_eig - kappa);
        }
        checks.push(AssumptionCheck {
            name: "tensor_symmetry",
            passed: sym_err == 0.0,
            margin: -sym_err,
            detail: format!("max |A^ab_ij - A^ba_ji| = {sym_err:e}"),
        });
        checks.push(AssumptionCheck {
            name: "ellipticity",
            passed: ell_slack >= -1e-12 * kappa.max(1.0),
            margin: ell_slack,
            detail: format!("kappa = {kappa} ({})", a.describe()),
        });
    }

    // analytic time derivative of the force
    {
        let f = spec.force.as_ref();
        let mut worst: f64 = 0.0;
        let mut supplied = false;
        let (mut f0, mut f1, mut fd) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
        let delta = 1e-5;
        for _ in 0..opts.tensor_samples {
            let t = rng.gen_range(0.1 * spec.horizon..=0.9 * spec.horizon);
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..=1.0)).collect();
            if !f.time_derivative(t, &x, &mut fd) {
                continue;
            }
            supplied = true;
            f.evaluate(t, &x, &mut f0);
            f.evaluate(t + delta, &x, &mut f1);
            let mut sample = vec![t];
            sample.extend_from_slice(&x);
            finite_all("f", &f0, &sample)?;
            for a in 0..m {
                let q = (f1[a] - f0[a]) / delta;
                let scale = fd[a].abs().max(1e-12);
                if fd[a].abs() > 1e-12 || q.abs() > 1e-12 {
                    worst = worst.max((q - fd[a]).abs() / scale);
                }
            }
        }
        if supplied {
            checks.push(AssumptionCheck {
                name: "force_derivative",
                passed: worst <= 1e-4,
                margin: 1e-4 - worst,
                detail: format!("max relative forward-difference error {worst:e} ({})", f.describe()),
            });
        }
    }

    let kappa = spec.tensor.ellipticity();
    let mu = spec.energy.monotonicity_modulus();
    let product = mu * cp * cp;
    let margin = kappa - product;
    checks.push(AssumptionCheck {
        name: "mild_convexity",
        passed: margin > 0.0,
        margin,
        detail: format!("mu C_P^2 = {product} vs kappa = {kappa}"),
    });
    Ok(AdmissibilityReport { kappa, mu, poincare_constant: cp, product, margin, checks })
}
