//! The O(N²) pairwise force kernel.
//!
//! For particle `i` the acceleration is
//!
//! ```text
//! a_i = (1/N) Σ_j Φ(|x_i − x_j|) G(v_j − v_i) + (Λ^{2α−1}/N) Σ_j F(|x_i − x_j|²)(x_i − x_j)
//! ```
//!
//! with Λ the alignment measure of the whole velocity field. Each row is
//! reduced sequentially in index order with compensated sums, so splitting
//! rows across threads does not change a single bit of the output. The
//! diagonal `j = i` is not skipped: G(0) = 0 and F(0)·0 = 0 make it vanish.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::math::Float;
use crate::math::CompensatedSum;
use crate::model::ModelSpec;

use super::ParticleState;

/// Λ(v) = (1/N) (Σ_{i>j} |v_i − v_j|²)^{1/2}, evaluated from its definition
/// (O(N² d)).
pub fn alignment_measure(state: &ParticleState) -> f64 {
    let n = state.len();
    let mut acc = CompensatedSum::new();
    for i in 0..n {
        for j in 0..i {
            let mut s = 0.0;
            for k in 0..state.dim() {
                let dv = state.v(i, k) - state.v(j, k);
                s += dv * dv;
            }
            acc.add(s);
        }
    }
    acc.value().max(0.0).sqrt() / n as f64
}

/// Λ(v) through the equivalent centred form ((1/N) Σ_i |v_i − v̄|²)^{1/2},
/// O(N d). This is what the force kernel uses once per evaluation.
pub fn velocity_spread(state: &ParticleState) -> f64 {
    let n = state.len() as f64;
    let mut total = CompensatedSum::new();
    for k in 0..state.dim() {
        let col = state.v_component(k);
        let mean = crate::math::compensated_sum(col.iter().copied()) / n;
        for &c in col {
            let dv = c - mean;
            total.add(dv * dv);
        }
    }
    (total.value().max(0.0) / n).sqrt()
}

/// Un-normalized pair contributions for the ordered pair (i, j):
/// `(Φ(|x_i − x_j|) G(v_j − v_i), F(|x_i − x_j|²)(x_i − x_j))`.
pub fn pair_term(state: &ParticleState, model: &ModelSpec, i: usize, j: usize) -> (Vec<f64>, Vec<f64>) {
    let d = state.dim();
    let mut r2 = 0.0;
    let mut dv2 = 0.0;
    for k in 0..d {
        let dx = state.x(i, k) - state.x(j, k);
        let dv = state.v(j, k) - state.v(i, k);
        r2 += dx * dx;
        dv2 += dv * dv;
    }
    let pg = model.kernel.rate_sq(r2) * model.coupling.factor_sq(dv2);
    let f = model.repulsion.factor_sq(r2);
    let align = (0..d).map(|k| pg * (state.v(j, k) - state.v(i, k))).collect();
    let rep = (0..d).map(|k| f * (state.x(i, k) - state.x(j, k))).collect();
    (align, rep)
}

/// Λ^{2α−1}, the global factor of the repulsion sum.
#[inline]
pub(crate) fn repulsion_weight(spread: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        spread
    } else {
        spread.powf(2.0 * alpha - 1.0)
    }
}

/// Acceleration of particle `i` written into `out` (length d).
fn accumulate_row(
    state: &ParticleState,
    model: &ModelSpec,
    weight: f64,
    i: usize,
    sums: &mut [CompensatedSum],
    out: &mut [f64],
) {
    let n = state.len();
    let d = state.dim();
    let repel = !model.repulsion.is_zero();
    sums.iter_mut().for_each(|s| *s = CompensatedSum::new());
    let (align, rep) = sums.split_at_mut(d);
    let xs = state.positions_soa();
    let vs = state.velocities_soa();
    for j in 0..n {
        let mut r2 = 0.0;
        let mut dv2 = 0.0;
        for k in 0..d {
            let dx = xs[k * n + i] - xs[k * n + j];
            let dv = vs[k * n + j] - vs[k * n + i];
            r2 += dx * dx;
            dv2 += dv * dv;
        }
        let pg = model.kernel.rate_sq(r2) * model.coupling.factor_sq(dv2);
        for k in 0..d {
            align[k].add(pg * (vs[k * n + j] - vs[k * n + i]));
        }
        if repel {
            let f = model.repulsion.factor_sq(r2);
            for k in 0..d {
                rep[k].add(f * (xs[k * n + i] - xs[k * n + j]));
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    for k in 0..d {
        out[k] = (align[k].value() + weight * rep[k].value()) * inv_n;
    }
}

/// Accelerations of all particles, structure-of-arrays like the velocities.
pub fn accelerations(state: &ParticleState, model: &ModelSpec) -> Vec<f64> {
    let mut out = vec![0.0; state.len() * state.dim()];
    let mut rows = vec![0.0; state.len() * state.dim()];
    accelerations_into(state, model, &mut rows, &mut out);
    out
}

/// Same as [`accelerations`] with caller-provided buffers: `rows` is
/// particle-major scratch, `out` receives the structure-of-arrays result.
pub fn accelerations_into(state: &ParticleState, model: &ModelSpec, rows: &mut [f64], out: &mut [f64]) {
    let n = state.len();
    let d = state.dim();
    debug_assert_eq!(rows.len(), n * d);
    debug_assert_eq!(out.len(), n * d);
    let weight = if model.repulsion.is_zero() {
        0.0
    } else {
        repulsion_weight(velocity_spread(state), model.alpha())
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        // Small systems are not worth the fork/join overhead.
        if n >= 128 {
            rows.par_chunks_mut(d).enumerate().for_each_init(
                || vec![CompensatedSum::new(); 2 * d],
                |sums, (i, row)| accumulate_row(state, model, weight, i, sums, row),
            );
        } else {
            serial_rows(state, model, weight, rows);
        }
    }
    #[cfg(not(feature = "parallel"))]
    serial_rows(state, model, weight, rows);

    for i in 0..n {
        for k in 0..d {
            out[k * n + i] = rows[i * d + k];
        }
    }
}

fn serial_rows(state: &ParticleState, model: &ModelSpec, weight: f64, rows: &mut [f64]) {
    let d = state.dim();
    let mut sums = vec![CompensatedSum::new(); 2 * d];
    for (i, row) in rows.chunks_mut(d).enumerate() {
        accumulate_row(state, model, weight, i, &mut sums, row);
    }
}
