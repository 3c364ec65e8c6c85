use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::math::Float;
use crate::dynamics::repulsion_weight;
use crate::math::{norm_sq, CompensatedSum};
use crate::model::ModelSpec;

use super::{moments, EmpiricalMeasure};

/// Mean-field force field H_[μ] of a fixed measure, with the global
/// repulsion factor G[μ]^{(2α−1)/2} computed once.
pub struct FieldEvaluator<'a> {
    mu: &'a EmpiricalMeasure,
    model: &'a ModelSpec,
    weight: f64,
}

impl<'a> FieldEvaluator<'a> {
    pub fn new(mu: &'a EmpiricalMeasure, model: &'a ModelSpec) -> Self {
        let weight = if model.repulsion.is_zero() {
            0.0
        } else {
            repulsion_weight(moments(mu).gf.max(0.0).sqrt(), model.alpha())
        };
        Self { mu, model, weight }
    }

    /// H(x, v) = −Σ_a w_a Φ(|x − x_a|) G(v − v_a) + G[μ]^{(2α−1)/2} Σ_a w_a F(|x − x_a|²)(x − x_a).
    pub fn eval_into(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        let d = self.mu.dim();
        let mut align = vec![CompensatedSum::new(); d];
        let mut rep = vec![CompensatedSum::new(); d];
        let repel = self.weight != 0.0;
        let mut dx = vec![0.0; d];
        let mut dv = vec![0.0; d];
        for a in 0..self.mu.len() {
            let w = self.mu.weight(a);
            let (xa, va) = (self.mu.x(a), self.mu.v(a));
            for k in 0..d {
                dx[k] = x[k] - xa[k];
                dv[k] = va[k] - v[k];
            }
            let r2 = norm_sq(&dx);
            // −G(v − v_a) = G(v_a − v) by oddness.
            let pg = w * self.model.kernel.rate_sq(r2) * self.model.coupling.factor_sq(norm_sq(&dv));
            for k in 0..d {
                align[k].add(pg * dv[k]);
            }
            if repel {
                let f = w * self.model.repulsion.factor_sq(r2);
                for k in 0..d {
                    rep[k].add(f * dx[k]);
                }
            }
        }
        for k in 0..d {
            out[k] = align[k].value() + self.weight * rep[k].value();
        }
    }

    pub fn eval(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.mu.dim()];
        self.eval_into(x, v, &mut out);
        out
    }
}

/// H_[μ](x, v) for a single point.
pub fn field_h(mu: &EmpiricalMeasure, x: &[f64], v: &[f64], model: &ModelSpec) -> Vec<f64> {
    FieldEvaluator::new(mu, model).eval(x, v)
}
