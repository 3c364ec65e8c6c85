use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

#[allow(unused_imports)]
use crate::math::Float;
use crate::dynamics::ParticleState;
use crate::math::CompensatedSum;

/// Tolerance on Σw = 1 for probability measures.
pub const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("measure has no atoms")]
    Empty,
    #[error("dimension must be >= 1")]
    ZeroDimension,
    #[error("coordinate buffers do not match {atoms} atoms in dimension {dim}")]
    Length { atoms: usize, dim: usize },
    #[error("weight {weight} of atom {atom} is not positive and finite")]
    Weight { atom: usize, weight: f64 },
    #[error("total mass {0} differs from 1")]
    Mass(f64),
    #[error("non-finite coordinate in atom {0}")]
    NonFinite(usize),
}

/// Norm used on phase space (x, v) ∈ ℝ^d × ℝ^d.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseNorm {
    /// |(x, v)| on the concatenated 2d-vector.
    #[default]
    Euclidean,
    /// |x| + |v|.
    SumOfNorms,
}

impl PhaseNorm {
    #[inline]
    pub fn combine(self, x2: f64, v2: f64) -> f64 {
        match self {
            PhaseNorm::Euclidean => (x2 + v2).sqrt(),
            PhaseNorm::SumOfNorms => x2.sqrt() + v2.sqrt(),
        }
    }
}

/// Weighted atoms (x_a, v_a, w_a) on phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    pub(crate) d: usize,
    pub(crate) xs: Vec<f64>,
    pub(crate) vs: Vec<f64>,
    pub(crate) ws: Vec<f64>,
}

impl EmpiricalMeasure {
    /// Particle-major coordinates; weights must be positive and sum to 1
    /// within [`MASS_TOLERANCE`].
    pub fn new(d: usize, xs: Vec<f64>, vs: Vec<f64>, ws: Vec<f64>) -> Result<Self, MeasureError> {
        if d == 0 {
            return Err(MeasureError::ZeroDimension);
        }
        let n = ws.len();
        if n == 0 {
            return Err(MeasureError::Empty);
        }
        if xs.len() != n * d || vs.len() != n * d {
            return Err(MeasureError::Length { atoms: n, dim: d });
        }
        for (a, &w) in ws.iter().enumerate() {
            if !(w > 0.0 && w.is_finite()) {
                return Err(MeasureError::Weight { atom: a, weight: w });
            }
        }
        for a in 0..n {
            let fin = xs[a * d..(a + 1) * d].iter().chain(&vs[a * d..(a + 1) * d]).all(|c| c.is_finite());
            if !fin {
                return Err(MeasureError::NonFinite(a));
            }
        }
        let mass = crate::math::compensated_sum(ws.iter().copied());
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(MeasureError::Mass(mass));
        }
        Ok(Self { d, xs, vs, ws })
    }

    /// μ^N = (1/N) Σ δ_{x_i} ⊗ δ_{v_i}.
    pub fn from_particles(state: &ParticleState) -> Self {
        let n = state.len();
        let d = state.dim();
        let mut xs = vec![0.0; n * d];
        let mut vs = vec![0.0; n * d];
        for i in 0..n {
            for k in 0..d {
                xs[i * d + k] = state.x(i, k);
                vs[i * d + k] = state.v(i, k);
            }
        }
        Self { d, xs, vs, ws: vec![1.0 / n as f64; n] }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.ws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ws.is_empty()
    }

    #[inline]
    pub fn x(&self, a: usize) -> &[f64] {
        &self.xs[a * self.d..(a + 1) * self.d]
    }

    #[inline]
    pub fn v(&self, a: usize) -> &[f64] {
        &self.vs[a * self.d..(a + 1) * self.d]
    }

    #[inline]
    pub fn weight(&self, a: usize) -> f64 {
        self.ws[a]
    }

    pub fn weights(&self) -> &[f64] {
        &self.ws
    }

    /// Same atoms with every velocity replaced by `v_ref`: ρ ⊗ δ_{v_ref}.
    pub fn with_velocity(&self, v_ref: &[f64]) -> Self {
        assert_eq!(v_ref.len(), self.d);
        let vs = (0..self.len()).flat_map(|_| v_ref.iter().copied()).collect();
        Self { d: self.d, xs: self.xs.clone(), vs, ws: self.ws.clone() }
    }

    /// Adds an atom, rescaling the existing weights by `1 − w`.
    pub fn push_atom(&mut self, x: &[f64], v: &[f64], w: f64) {
        assert!(w > 0.0 && w < 1.0);
        self.ws.iter_mut().for_each(|u| *u *= 1.0 - w);
        self.xs.extend_from_slice(x);
        self.vs.extend_from_slice(v);
        self.ws.push(w);
    }
}

/// Moment functionals of a phase-space measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    /// ∫ v f
    pub v1: Vec<f64>,
    /// ∫ x f
    pub x1: Vec<f64>,
    /// ∫ |v|² f
    pub v2: f64,
    /// ∫ |x|² f
    pub x2: f64,
    /// Velocity fluctuation ∫|v|² f − |∫ v f|².
    pub gf: f64,
    /// Position fluctuation ∫|x|² f − |∫ x f|².
    pub gamma: f64,
    pub support_radius: f64,
}

/// All moments, with the support radius in the Euclidean phase norm.
pub fn moments(mu: &EmpiricalMeasure) -> MomentSet {
    moments_with(mu, PhaseNorm::Euclidean)
}

/// The fluctuations are accumulated in centred form Σ w |v − V₁|², which is
/// algebraically the same quantity and does not cancel catastrophically when
/// the mean is large compared with the spread.
pub fn moments_with(mu: &EmpiricalMeasure, norm: PhaseNorm) -> MomentSet {
    let d = mu.dim();
    let n = mu.len();
    let mean = |coords: &[f64]| -> Vec<f64> {
        (0..d)
            .map(|k| {
                let mut s = CompensatedSum::new();
                for a in 0..n {
                    s.add(mu.weight(a) * coords[a * d + k]);
                }
                s.value()
            })
            .collect()
    };
    let v1 = mean(&mu.vs);
    let x1 = mean(&mu.xs);
    let mut v2 = CompensatedSum::new();
    let mut x2 = CompensatedSum::new();
    let mut gf = CompensatedSum::new();
    let mut gamma = CompensatedSum::new();
    for a in 0..n {
        let w = mu.weight(a);
        let (x, v) = (mu.x(a), mu.v(a));
        let mut sv = 0.0;
        let mut sx = 0.0;
        let mut cv = 0.0;
        let mut cx = 0.0;
        for k in 0..d {
            sv += v[k] * v[k];
            sx += x[k] * x[k];
            cv += (v[k] - v1[k]) * (v[k] - v1[k]);
            cx += (x[k] - x1[k]) * (x[k] - x1[k]);
        }
        v2.add(w * sv);
        x2.add(w * sx);
        gf.add(w * cv);
        gamma.add(w * cx);
    }
    MomentSet {
        v1,
        x1,
        v2: v2.value(),
        x2: x2.value(),
        gf: gf.value(),
        gamma: gamma.value(),
        support_radius: support_radius_with(mu, norm),
    }
}

pub fn moments_of_state(state: &ParticleState) -> MomentSet {
    moments(&EmpiricalMeasure::from_particles(state))
}

/// max over atoms of |(x, v)| in the Euclidean phase norm.
pub fn support_radius(mu: &EmpiricalMeasure) -> f64 {
    support_radius_with(mu, PhaseNorm::Euclidean)
}

pub fn support_radius_with(mu: &EmpiricalMeasure, norm: PhaseNorm) -> f64 {
    (0..mu.len())
        .map(|a| norm.combine(crate::math::norm_sq(mu.x(a)), crate::math::norm_sq(mu.v(a))))
        .fold(0.0, f64::max)
}
