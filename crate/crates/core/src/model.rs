//! Model ingredients: the interaction rate Φ, the coupling force G and the
//! repelling force F, together with the structural assumptions the decay
//! and well-posedness estimates rely on.
//!
//! All three functions enter the particle system only through scalar
//! factors of squared norms:
//!
//! - Φ(|x|) is evaluated from `|x|²` ([`KernelSpec::rate_sq`]),
//! - G(v) = v · g(|v|²) ([`CouplingSpec::factor_sq`]),
//! - F(|x|²) x is the vector x scaled by F(|x|²) ([`RepulsionSpec::factor_sq`]),
//!
//! which keeps the pairwise kernel free of square roots and branches.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[allow(unused_imports)]
use crate::math::Float;
use crate::math::{all_finite, norm_sq, seeded_rng};

/// Upper end (exclusive) of the exponent range the global estimates cover.
pub const ALPHA_MAX: f64 = 1.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("non-finite input to {0}")]
    NonFinite(&'static str),
    #[error("negative distance {0}")]
    NegativeDistance(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("smallness condition violated: C* = {cstar} <= 0")]
    Smallness { cstar: f64 },
}

/// Interaction rate Φ(r).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// Φ(r) = level.
    Constant { level: f64 },
    /// Φ(r) = amplitude / (1 + r²)^decay.
    CuckerSmale { amplitude: f64, decay: f64 },
}

impl KernelSpec {
    /// Φ evaluated at a distance given by its square.
    #[inline]
    pub fn rate_sq(&self, r2: f64) -> f64 {
        match *self {
            KernelSpec::Constant { level } => level,
            KernelSpec::CuckerSmale { amplitude, decay } => {
                if decay == 1.0 {
                    amplitude / (1.0 + r2)
                } else if decay == 0.5 {
                    amplitude / (1.0 + r2).sqrt()
                } else if decay == 0.25 {
                    amplitude / (1.0 + r2).sqrt().sqrt()
                } else {
                    amplitude * (1.0 + r2).powf(-decay)
                }
            }
        }
    }

    /// Φ(r), checked.
    pub fn eval(&self, r: f64) -> Result<f64, ModelError> {
        if !r.is_finite() {
            return Err(ModelError::NonFinite("eval_phi"));
        }
        if r < 0.0 {
            return Err(ModelError::NegativeDistance(r));
        }
        Ok(self.rate_sq(r * r))
    }

    /// Infimum of Φ over distances in `[0, radius]`; every preset is
    /// non-increasing in r, so this is Φ(radius).
    pub fn min_on(&self, radius: f64) -> f64 {
        self.rate_sq(radius * radius)
    }

    fn validate(&self) -> Result<(), ModelError> {
        match *self {
            KernelSpec::Constant { level } if !(level > 0.0 && level.is_finite()) => Err(
                ModelError::Parameter(alloc::format!("constant kernel level {level} must be > 0")),
            ),
            KernelSpec::CuckerSmale { amplitude, decay }
                if !(amplitude > 0.0 && amplitude.is_finite() && decay >= 0.0 && decay.is_finite()) =>
            {
                Err(ModelError::Parameter(alloc::format!(
                    "cucker_smale kernel needs amplitude > 0 and decay >= 0 (got {amplitude}, {decay})"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Coupling force G(v) = v · |v|^{2α−2}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingSpec {
    /// G(v) = v, α = 1.
    Linear,
    /// G(v) = v |v|^{2α−2}.
    Power { alpha: f64 },
}

impl CouplingSpec {
    pub fn alpha(&self) -> f64 {
        match *self {
            CouplingSpec::Linear => 1.0,
            CouplingSpec::Power { alpha } => alpha,
        }
    }

    /// Scalar g with G(v) = g(|v|²) v.
    #[inline]
    pub fn factor_sq(&self, v2: f64) -> f64 {
        match *self {
            CouplingSpec::Linear => 1.0,
            CouplingSpec::Power { alpha } => {
                if alpha == 1.0 || v2 == 0.0 {
                    1.0
                } else {
                    v2.powf(alpha - 1.0)
                }
            }
        }
    }

    pub fn eval(&self, v: &[f64]) -> Result<Vec<f64>, ModelError> {
        if !all_finite(v) {
            return Err(ModelError::NonFinite("eval_g"));
        }
        let g = self.factor_sq(norm_sq(v));
        Ok(v.iter().map(|x| x * g).collect())
    }
}

/// Repelling force F(|x|²) x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RepulsionSpec {
    Zero,
    /// F(s) = cap / √(s + softening).
    Saturated { cap: f64, softening: f64 },
}

impl RepulsionSpec {
    /// F(s) for s = |x|².
    #[inline]
    pub fn factor_sq(&self, s: f64) -> f64 {
        match *self {
            RepulsionSpec::Zero => 0.0,
            RepulsionSpec::Saturated { cap, softening } => cap / (s + softening).sqrt(),
        }
    }

    /// Declared bound F* on |F(|x|²) x|.
    pub fn cap(&self) -> f64 {
        match *self {
            RepulsionSpec::Zero => 0.0,
            RepulsionSpec::Saturated { cap, .. } => cap,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, RepulsionSpec::Zero)
            || matches!(self, RepulsionSpec::Saturated { cap, .. } if *cap == 0.0)
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        if !all_finite(x) {
            return Err(ModelError::NonFinite("eval_repulsion"));
        }
        let f = self.factor_sq(norm_sq(x));
        Ok(x.iter().map(|c| c * f).collect())
    }

    fn validate(&self) -> Result<(), ModelError> {
        match *self {
            RepulsionSpec::Saturated { cap, softening }
                if !(cap >= 0.0 && cap.is_finite() && softening > 0.0 && softening.is_finite()) =>
            {
                Err(ModelError::Parameter(alloc::format!(
                    "saturated repulsion needs cap >= 0 and softening > 0 (got {cap}, {softening})"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// The full model: dimension, the three ingredient functions and the
/// declared lower bound Φ* of the interaction rate.
///
/// G* is 1 for both coupling presets and F* is the repulsion cap, so only Φ*
/// is a free constant. For the Cucker–Smale kernel Φ* can only hold on a
/// bounded set of distances; the assumption checker reports the ball it was
/// checked on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub dimension: usize,
    pub kernel: KernelSpec,
    pub coupling: CouplingSpec,
    pub repulsion: RepulsionSpec,
    pub phi_star: f64,
}

impl ModelSpec {
    /// Φ ≡ 1, G(v) = v, F ≡ 0: the Cucker–Smale model with constant rate.
    pub fn linear_constant(dimension: usize) -> Self {
        Self {
            dimension,
            kernel: KernelSpec::Constant { level: 1.0 },
            coupling: CouplingSpec::Linear,
            repulsion: RepulsionSpec::Zero,
            phi_star: 1.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.coupling.alpha()
    }

    pub fn g_star(&self) -> f64 {
        1.0
    }

    pub fn f_star(&self) -> f64 {
        self.repulsion.cap()
    }

    /// Same model with a different declared Φ*.
    pub fn with_phi_star(mut self, phi_star: f64) -> Self {
        self.phi_star = phi_star;
        self
    }

    /// Structural checks: dimension, parameter domains and α ∈ [1, 5/4).
    /// The smallness condition is left to [`cstar`] and [`check_assumptions`]
    /// so that violating models can still be built and reported on.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.dimension == 0 {
            return Err(ModelError::Parameter("dimension must be >= 1".into()));
        }
        self.kernel.validate()?;
        self.repulsion.validate()?;
        let alpha = self.alpha();
        if !(1.0..ALPHA_MAX).contains(&alpha) {
            return Err(ModelError::Parameter(alloc::format!(
                "alpha = {alpha} outside [1, {ALPHA_MAX})"
            )));
        }
        if !(self.phi_star > 0.0 && self.phi_star.is_finite()) {
            return Err(ModelError::Parameter(alloc::format!(
                "phi_star = {} must be > 0",
                self.phi_star
            )));
        }
        Ok(())
    }
}

pub fn eval_phi(spec: &KernelSpec, r: f64) -> Result<f64, ModelError> {
    spec.eval(r)
}

pub fn eval_g(spec: &CouplingSpec, v: &[f64]) -> Result<Vec<f64>, ModelError> {
    spec.eval(v)
}

pub fn eval_repulsion(spec: &RepulsionSpec, x: &[f64]) -> Result<Vec<f64>, ModelError> {
    spec.eval(x)
}

/// C* = 2^α Φ* G* − √2 F*, the rate constant of the velocity-fluctuation
/// decay. Fails when the smallness condition does not hold.
pub fn cstar(spec: &ModelSpec) -> Result<f64, ModelError> {
    let c = cstar_unchecked(spec.alpha(), spec.phi_star, spec.g_star(), spec.f_star());
    if c > 0.0 {
        Ok(c)
    } else {
        Err(ModelError::Smallness { cstar: c })
    }
}

pub(crate) fn cstar_unchecked(alpha: f64, phi_star: f64, g_star: f64, f_star: f64) -> f64 {
    2f64.powf(alpha) * phi_star * g_star - core::f64::consts::SQRT_2 * f_star
}

/// One line of an [`AssumptionReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub pass: bool,
    /// The worst sampled value of the checked quantity.
    pub worst: f64,
    /// Sample point realizing `worst` (empty for pure parameter checks).
    pub witness: Vec<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// Radius of the sampled ball in each of the x and v spaces.
    pub radius: f64,
    pub samples: usize,
    pub checks: Vec<AssumptionCheck>,
    /// Smallest sampled Φ(|x|) for |x| ≤ radius.
    pub phi_min: f64,
    /// Fitted C in |Φ(|x|) G(v)| ≤ C (1 + |x| + |v|).
    pub growth_constant: f64,
    /// C* from the declared constants, when positive.
    pub cstar: Option<f64>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

const LIPSCHITZ_MIN_SEPARATION: f64 = 1e-6;
const COERCIVITY_SLACK: f64 = 1e-12;

fn sample_ball<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    let mut p: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let n = norm_sq(&p).sqrt();
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / dim as f64);
    let scale = if n > 0.0 { r / n } else { 0.0 };
    p.iter_mut().for_each(|c| *c *= scale);
    p
}

/// Samples the assumptions on the ball of the given radius.
///
/// Failures are report entries, never errors. Φ is radial, so the sampled
/// points always include |x| = 0 and |x| = radius along the first axis;
/// the reported `phi_min` is therefore exact for the non-increasing presets.
pub fn check_assumptions(
    spec: &ModelSpec,
    sample_budget: usize,
    radius: f64,
    seed: u64,
) -> AssumptionReport {
    let d = spec.dimension.max(1);
    let budget = sample_budget.max(1);
    let mut rng = seeded_rng(seed, 0x6d6f64656c);

    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(budget + 2);
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(budget + 2);
    let mut axis = vec![0.0; d];
    xs.push(axis.clone());
    vs.push(axis.clone());
    axis[0] = radius;
    xs.push(axis.clone());
    vs.push(axis.clone());
    for _ in 0..budget {
        xs.push(sample_ball(&mut rng, d, radius));
        vs.push(sample_ball(&mut rng, d, radius));
    }

    let alpha = spec.alpha();
    let g_star = spec.g_star();
    let f_star = spec.f_star();
    let mut checks = Vec::new();

    // Local Lipschitz ratios on consecutive sample pairs.
    let mut lip = (0.0f64, Vec::new());
    for k in 1..xs.len() {
        let (xa, xb) = (&xs[k - 1], &xs[k]);
        let (va, vb) = (&vs[k - 1], &vs[k]);
        let dx = crate::math::dist(xa, xb);
        let dv = crate::math::dist(va, vb);
        if dx >= LIPSCHITZ_MIN_SEPARATION {
            let phi_ratio = (spec.kernel.rate_sq(norm_sq(xa)) - spec.kernel.rate_sq(norm_sq(xb)))
                .abs()
                / dx;
            let fa = spec.repulsion.factor_sq(norm_sq(xa));
            let fb = spec.repulsion.factor_sq(norm_sq(xb));
            let f_ratio = (fa - fb).abs() / dx;
            for r in [phi_ratio, f_ratio] {
                if !(r <= lip.0) {
                    lip = (r, xb.clone());
                }
            }
        }
        if dv >= LIPSCHITZ_MIN_SEPARATION {
            let ga = spec.coupling.factor_sq(norm_sq(va));
            let gb = spec.coupling.factor_sq(norm_sq(vb));
            let diff: Vec<f64> = va.iter().zip(vb).map(|(a, b)| a * ga - b * gb).collect();
            let r = norm_sq(&diff).sqrt() / dv;
            if !(r <= lip.0) {
                lip = (r, vb.clone());
            }
        }
    }
    checks.push(AssumptionCheck {
        name: "A1_local_lipschitz",
        pass: lip.0.is_finite(),
        worst: lip.0,
        witness: lip.1,
        detail: "max finite-difference ratio of Phi, G, F on sampled pairs".into(),
    });

    // Oddness and coercivity of G.
    let mut odd = (0.0f64, Vec::new());
    let mut coer = (f64::INFINITY, Vec::new());
    for v in &vs {
        let g = spec.coupling.factor_sq(norm_sq(v));
        let neg: Vec<f64> = v.iter().map(|c| -c).collect();
        let gn = spec.coupling.factor_sq(norm_sq(&neg));
        let gap = v
            .iter()
            .zip(&neg)
            .map(|(a, b)| (a * g + b * gn).abs())
            .fold(0.0, f64::max);
        if gap > odd.0 {
            odd = (gap, v.clone());
        }
        let v2 = norm_sq(v);
        let margin = g * v2 - g_star * v2.powf(alpha);
        if margin < coer.0 {
            coer = (margin, v.clone());
        }
    }
    checks.push(AssumptionCheck {
        name: "A2a_odd",
        pass: odd.0 == 0.0,
        worst: odd.0,
        witness: odd.1,
        detail: "max |G(v) + G(-v)|".into(),
    });
    checks.push(AssumptionCheck {
        name: "A2b_coercive",
        pass: coer.0 >= -COERCIVITY_SLACK,
        worst: coer.0,
        witness: coer.1,
        detail: alloc::format!("min G(v).v - G*|v|^(2 alpha), G* = {g_star}"),
    });

    // Lower bound on Φ and the repulsion bound.
    let mut phi_min = (f64::INFINITY, Vec::new());
    let mut rep_max = (0.0f64, Vec::new());
    for x in &xs {
        let x2 = norm_sq(x);
        let phi = spec.kernel.rate_sq(x2);
        if phi < phi_min.0 {
            phi_min = (phi, x.clone());
        }
        let fx = spec.repulsion.factor_sq(x2) * x2.sqrt();
        if fx > rep_max.0 {
            rep_max = (fx, x.clone());
        }
    }
    checks.push(AssumptionCheck {
        name: "A3_phi_lower_bound",
        pass: phi_min.0 >= spec.phi_star,
        worst: phi_min.0,
        witness: phi_min.1.clone(),
        detail: alloc::format!(
            "min Phi(|x|) over |x| <= {radius}; declared Phi* = {}",
            spec.phi_star
        ),
    });
    checks.push(AssumptionCheck {
        name: "A3_repulsion_bound",
        pass: rep_max.0 <= f_star,
        worst: rep_max.0,
        witness: rep_max.1,
        detail: alloc::format!("max |F(|x|^2) x|; F* = {f_star}"),
    });
    let threshold = 2f64.powf(alpha - 0.5) * spec.phi_star * g_star;
    checks.push(AssumptionCheck {
        name: "A3_smallness",
        pass: f_star < threshold,
        worst: threshold - f_star,
        witness: Vec::new(),
        detail: alloc::format!("F* = {f_star} < 2^(alpha-1/2) Phi* G* = {threshold}"),
    });

    // Linear growth of Φ G.
    let mut growth = (0.0f64, Vec::new());
    for (x, v) in xs.iter().zip(&vs) {
        let x2 = norm_sq(x);
        let v2 = norm_sq(v);
        let val = spec.kernel.rate_sq(x2) * spec.coupling.factor_sq(v2) * v2.sqrt();
        let c = val / (1.0 + x2.sqrt() + v2.sqrt());
        if !(c <= growth.0) {
            growth = (c, v.clone());
        }
    }
    checks.push(AssumptionCheck {
        name: "A4_linear_growth",
        pass: growth.0.is_finite(),
        worst: growth.0,
        witness: growth.1,
        detail: "fitted C in |Phi G| <= C (1 + |x| + |v|)".into(),
    });

    checks.push(AssumptionCheck {
        name: "alpha_range",
        pass: (1.0..ALPHA_MAX).contains(&alpha),
        worst: alpha,
        witness: Vec::new(),
        detail: alloc::format!("alpha in [1, {ALPHA_MAX})"),
    });

    let c = cstar_unchecked(alpha, spec.phi_star, g_star, f_star);
    AssumptionReport {
        radius,
        samples: budget,
        checks,
        phi_min: phi_min.0,
        growth_constant: growth.0,
        cstar: (c > 0.0).then_some(c),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model(kernel: KernelSpec, coupling: CouplingSpec, repulsion: RepulsionSpec, phi_star: f64) -> ModelSpec {
        ModelSpec { dimension: 2, kernel, coupling, repulsion, phi_star }
    }

    #[test]
    fn phi_examples() {
        assert_eq!(eval_phi(&KernelSpec::Constant { level: 1.0 }, 7.3).unwrap(), 1.0);
        let cs = KernelSpec::CuckerSmale { amplitude: 1.0, decay: 1.0 };
        assert_eq!(eval_phi(&cs, 0.0).unwrap(), 1.0);
        assert_eq!(eval_phi(&cs, 1.0).unwrap(), 0.5);
        assert!(matches!(eval_phi(&cs, f64::NAN), Err(ModelError::NonFinite(_))));
        assert!(matches!(eval_phi(&cs, f64::INFINITY), Err(ModelError::NonFinite(_))));
        assert!(matches!(eval_phi(&cs, -1.0), Err(ModelError::NegativeDistance(_))));
        let cs_half = KernelSpec::CuckerSmale { amplitude: 2.0, decay: 0.5 };
        assert!((eval_phi(&cs_half, 3.0).unwrap() - 2.0 / 10f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn coupling_examples() {
        assert_eq!(eval_g(&CouplingSpec::Linear, &[2.0, -1.0]).unwrap(), vec![2.0, -1.0]);
        let p = CouplingSpec::Power { alpha: 1.25 };
        assert_eq!(eval_g(&p, &[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(eval_g(&p, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(eval_g(&CouplingSpec::Linear, &[0.0]).unwrap(), vec![0.0]);
        assert!(eval_g(&p, &[f64::NAN]).is_err());
    }

    #[test]
    fn repulsion_examples() {
        assert_eq!(eval_repulsion(&RepulsionSpec::Zero, &[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        let s = RepulsionSpec::Saturated { cap: 1.0, softening: 1.0 };
        assert_eq!(eval_repulsion(&s, &[0.0, 0.0, 0.0]).unwrap(), vec![0.0, 0.0, 0.0]);
        let s = RepulsionSpec::Saturated { cap: 2.0, softening: 0.01 };
        let f = eval_repulsion(&s, &[3.0, 4.0]).unwrap();
        // 2·(3,4)/√25.01
        assert!((f[0] - 1.199_760_071_976_008_4).abs() < 1e-12, "{}", f[0]);
        assert!((f[1] - 1.599_680_095_968_011_3).abs() < 1e-12, "{}", f[1]);
        assert!(eval_repulsion(&s, &[f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn cstar_examples() {
        let base = ModelSpec::linear_constant(1);
        assert_eq!(cstar(&base).unwrap(), 2.0);
        let half = model(
            KernelSpec::Constant { level: 1.0 },
            CouplingSpec::Linear,
            RepulsionSpec::Saturated { cap: core::f64::consts::SQRT_2 * 0.5, softening: 1.0 },
            1.0,
        );
        assert!((cstar(&half).unwrap() - 1.0).abs() < 1e-15);
        let p = model(
            KernelSpec::Constant { level: 0.5 },
            CouplingSpec::Power { alpha: 1.2 },
            RepulsionSpec::Zero,
            0.5,
        );
        // 2^1.2 · 0.5
        assert!((cstar(&p).unwrap() - 1.148_698_354_997_035).abs() < 1e-12);
        let bad = model(
            KernelSpec::Constant { level: 1.0 },
            CouplingSpec::Linear,
            RepulsionSpec::Saturated { cap: 3.0, softening: 1.0 },
            1.0,
        );
        assert!(matches!(cstar(&bad), Err(ModelError::Smallness { .. })));
    }

    #[test]
    fn assumption_report_linear_constant_all_pass() {
        let spec = ModelSpec::linear_constant(2);
        for budget in [1, 10, 500] {
            let r = check_assumptions(&spec, budget, 3.0, 11);
            assert!(r.all_pass(), "{r:?}");
            assert_eq!(r.cstar, Some(2.0));
        }
    }

    #[test]
    fn assumption_report_flags_large_repulsion() {
        let spec = model(
            KernelSpec::Constant { level: 1.0 },
            CouplingSpec::Linear,
            RepulsionSpec::Saturated { cap: 3.0, softening: 1.0 },
            1.0,
        );
        let r = check_assumptions(&spec, 200, 2.0, 1);
        assert!(!r.get("A3_smallness").unwrap().pass);
        assert!(r.get("A3_repulsion_bound").unwrap().pass);
        assert!(!r.all_pass());
        assert_eq!(r.cstar, None);
        assert!(cstar(&spec).is_err());
    }

    #[test]
    fn assumption_report_cucker_smale_phi_witness() {
        let spec = model(
            KernelSpec::CuckerSmale { amplitude: 1.0, decay: 1.0 },
            CouplingSpec::Linear,
            RepulsionSpec::Zero,
            1.0 / 101.0,
        );
        let r = check_assumptions(&spec, 300, 10.0, 5);
        assert!((r.phi_min - 1.0 / 101.0).abs() < 1e-15);
        assert!((r.phi_min - 0.009_901).abs() < 1e-6);
        assert!(r.all_pass(), "{r:?}");
        // A declared bound above the sampled minimum is caught.
        let r = check_assumptions(&spec.with_phi_star(0.02), 300, 10.0, 5);
        assert!(!r.get("A3_phi_lower_bound").unwrap().pass);
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        let mut spec = ModelSpec::linear_constant(2);
        assert!(spec.validate().is_ok());
        spec.coupling = CouplingSpec::Power { alpha: 1.3 };
        assert!(spec.validate().is_err());
        spec.coupling = CouplingSpec::Power { alpha: 0.9 };
        assert!(spec.validate().is_err());
        let mut spec = ModelSpec::linear_constant(0);
        assert!(spec.validate().is_err());
        spec.dimension = 1;
        spec.repulsion = RepulsionSpec::Saturated { cap: 1.0, softening: 0.0 };
        assert!(spec.validate().is_err());
    }

    fn presets() -> Vec<CouplingSpec> {
        vec![
            CouplingSpec::Linear,
            CouplingSpec::Power { alpha: 1.1 },
            CouplingSpec::Power { alpha: 1.2 },
            CouplingSpec::Power { alpha: 1.249 },
        ]
    }

    proptest! {
        #[test]
        fn coupling_is_odd_and_coercive(v in proptest::collection::vec(-50.0f64..50.0, 1..4)) {
            for g in presets() {
                let gv = eval_g(&g, &v).unwrap();
                let neg: Vec<f64> = v.iter().map(|c| -c).collect();
                let gn = eval_g(&g, &neg).unwrap();
                for (a, b) in gv.iter().zip(&gn) {
                    prop_assert_eq!(a + b, 0.0);
                }
                let v2 = norm_sq(&v);
                if v2 > 0.0 {
                    let dot: f64 = gv.iter().zip(&v).map(|(a, b)| a * b).sum();
                    let rel = 1e-12 * v2.powf(g.alpha()).max(1.0);
                    prop_assert!(dot - v2.powf(g.alpha()) >= -rel);
                }
            }
        }

        #[test]
        fn saturated_repulsion_is_strictly_below_cap(
            x in proptest::collection::vec(-1e3f64..1e3, 1..4),
            cap in 0.01f64..5.0,
            eps in 1e-4f64..2.0,
        ) {
            let s = RepulsionSpec::Saturated { cap, softening: eps };
            let f = eval_repulsion(&s, &x).unwrap();
            prop_assert!(norm_sq(&f).sqrt() < cap);
            prop_assert_eq!(eval_repulsion(&RepulsionSpec::Zero, &x).unwrap(), vec![0.0; x.len()]);
        }

        #[test]
        fn constant_kernel_is_flat(r in 0.0f64..1e6, level in 0.1f64..10.0) {
            prop_assert_eq!(eval_phi(&KernelSpec::Constant { level }, r).unwrap(), level);
            let cs = KernelSpec::CuckerSmale { amplitude: level, decay: 0.7 };
            let p = eval_phi(&cs, r).unwrap();
            prop_assert!(p > 0.0 && p.is_finite());
        }

        #[test]
        fn cstar_sign_agrees_with_report(cap in 0.0f64..3.0, phi in 0.1f64..2.0, alpha in 1.0f64..1.25) {
            let spec = ModelSpec {
                dimension: 2,
                kernel: KernelSpec::Constant { level: phi },
                coupling: CouplingSpec::Power { alpha },
                repulsion: RepulsionSpec::Saturated { cap, softening: 0.5 },
                phi_star: phi,
            };
            let report = check_assumptions(&spec, 4, 1.0, 0);
            let small = report.get("A3_smallness").unwrap().pass;
            match cstar(&spec) {
                Ok(c) => { prop_assert!(small); prop_assert!(c > 0.0); }
                Err(_) => prop_assert!(!small),
            }
        }
    }
}
