use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::math::Float;

use super::{DiscreteMeasure, GroundMetric};

/// Above this many pairs the cost matrix is recomputed on the fly.
pub const DENSE_COST_LIMIT: usize = 10_000_000;

/// Ground costs c_ij, optionally truncated at `cap`.
pub(crate) enum Costs<'a> {
    Dense { n: usize, c: Vec<f64>, max: f64 },
    Streamed { mu: &'a DiscreteMeasure, nu: &'a DiscreteMeasure, metric: GroundMetric, cap: f64, max: f64 },
}

impl<'a> Costs<'a> {
    pub(crate) fn new(mu: &'a DiscreteMeasure, nu: &'a DiscreteMeasure, metric: GroundMetric, cap: f64) -> Self {
        let (m, n) = (mu.len(), nu.len());
        let cost = |i: usize, j: usize| metric.distance(mu.point(i), nu.point(j)).min(cap);
        if m * n <= DENSE_COST_LIMIT {
            let mut c = Vec::with_capacity(m * n);
            let mut max: f64 = 0.0;
            for i in 0..m {
                for j in 0..n {
                    let x = cost(i, j);
                    max = max.max(x);
                    c.push(x);
                }
            }
            Costs::Dense { n, c, max }
        } else {
            let mut max: f64 = 0.0;
            for i in 0..m {
                for j in 0..n {
                    max = max.max(cost(i, j));
                }
            }
            Costs::Streamed { mu, nu, metric, cap, max }
        }
    }

    #[inline]
    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Costs::Dense { n, c, .. } => c[i * n + j],
            Costs::Streamed { mu, nu, metric, cap, .. } => metric.distance(mu.point(i), nu.point(j)).min(*cap),
        }
    }

    pub(crate) fn max_abs(&self) -> f64 {
        match self {
            Costs::Dense { max, .. } | Costs::Streamed { max, .. } => *max,
        }
    }
}
