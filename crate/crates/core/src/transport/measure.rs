use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::math::Float;
use crate::kinetic::EmpiricalMeasure;
use crate::math::compensated_sum;

use super::TransportError;

/// Total-mass slack that is silently renormalized away.
pub const WEIGHT_SLACK: f64 = 1e-12;

/// Weighted points in R^k with total mass 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    k: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// `points` is point-major (`weights.len()` rows of `k` coordinates).
    pub fn new(k: usize, points: Vec<f64>, mut weights: Vec<f64>) -> Result<Self, TransportError> {
        if k == 0 || weights.is_empty() {
            return Err(TransportError::Empty);
        }
        if points.len() != k * weights.len() {
            return Err(TransportError::Dimension { expected: k * weights.len(), got: points.len() });
        }
        for (index, &weight) in weights.iter().enumerate() {
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(TransportError::Weight { index, weight });
            }
        }
        if let Some(p) = points.iter().position(|c| !c.is_finite()) {
            return Err(TransportError::NonFinite { index: p / k });
        }
        let mass = compensated_sum(weights.iter().copied());
        if (mass - 1.0).abs() > WEIGHT_SLACK {
            return Err(TransportError::Mass(mass));
        }
        if mass != 1.0 {
            weights.iter_mut().for_each(|w| *w /= mass);
        }
        Ok(Self { k, points, weights })
    }

    /// Equal weights 1/n.
    pub fn uniform(k: usize, points: Vec<f64>) -> Result<Self, TransportError> {
        let n = points.len().checked_div(k).unwrap_or(0);
        Self::new(k, points, alloc::vec![1.0 / n.max(1) as f64; n])
    }

    /// Atoms of a phase-space measure as points (x, v) ∈ R^{2d}.
    pub fn from_empirical(mu: &EmpiricalMeasure) -> Self {
        let d = mu.dim();
        let mut points = Vec::with_capacity(2 * d * mu.len());
        for a in 0..mu.len() {
            points.extend_from_slice(mu.x(a));
            points.extend_from_slice(mu.v(a));
        }
        Self { k: 2 * d, points, weights: mu.weights().to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.k..(i + 1) * self.k]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// All weights bitwise equal.
    pub fn is_uniform(&self) -> bool {
        self.weights.iter().all(|&w| w == self.weights[0])
    }
}

/// Ground metric on R^k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroundMetric {
    #[default]
    Euclidean,
    /// |a_x − b_x| + |a_v − b_v| with the blocks split at coordinate `split`.
    SumOfNorms { split: usize },
}

impl GroundMetric {
    /// The sum-of-norms metric on phase space R^d × R^d.
    pub fn sum_of_norms(d: usize) -> Self {
        Self::SumOfNorms { split: d }
    }

    pub fn validate(&self, k: usize) -> Result<(), TransportError> {
        match *self {
            Self::SumOfNorms { split } if split > k => Err(TransportError::Metric { split, dim: k }),
            _ => Ok(()),
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let block = |r: core::ops::Range<usize>| {
            let mut s = 0.0;
            for c in r {
                let t = a[c] - b[c];
                s += t * t;
            }
            s.sqrt()
        };
        match *self {
            Self::Euclidean => block(0..a.len()),
            Self::SumOfNorms { split } => block(0..split) + block(split..a.len()),
        }
    }
}

/// One positive entry of a transport plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanEntry {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

/// Sparse coupling together with its total cost.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransportPlan {
    pub entries: Vec<PlanEntry>,
    pub cost: f64,
}

impl TransportPlan {
    pub fn row_sums(&self, m: usize) -> Vec<f64> {
        let mut r = alloc::vec![0.0; m];
        for e in &self.entries {
            r[e.source] += e.mass;
        }
        r
    }

    pub fn column_sums(&self, n: usize) -> Vec<f64> {
        let mut c = alloc::vec![0.0; n];
        for e in &self.entries {
            c[e.target] += e.mass;
        }
        c
    }

    /// Σ π_ij · metric(p_i, q_j), recomputed from the points.
    pub fn evaluate(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure, metric: GroundMetric) -> f64 {
        compensated_sum(
            self.entries.iter().map(|e| e.mass * metric.distance(mu.point(e.source), nu.point(e.target))),
        )
    }
}
