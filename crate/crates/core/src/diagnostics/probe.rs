use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

#[allow(unused_imports)]
use crate::math::Float;
use crate::kinetic::{EmpiricalMeasure, FieldEvaluator};
use crate::math::{norm_sq, seeded_rng};
use crate::model::ModelSpec;

use super::DiagnosticsError;

const PROBE_STREAM: u64 = 0x6c69_7073;

/// `budget` points uniform in the unit ball of R^{2d}, then scaled.
fn unit_ball_points(d: usize, budget: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seeded_rng(seed, PROBE_STREAM);
    (0..budget)
        .map(|_| {
            let mut p: Vec<f64> = (0..2 * d).map(|_| rng.sample(StandardNormal)).collect();
            let n = norm_sq(&p).sqrt();
            let r = rng.random::<f64>().powf(1.0 / (2 * d) as f64);
            p.iter_mut().for_each(|c| *c *= if n > 0.0 { r / n } else { 0.0 });
            p
        })
        .collect()
}

/// max over pairs of |H(p) − H(q)| / |p − q|.
fn pairwise_max(field: &FieldEvaluator<'_>, d: usize, points: &[Vec<f64>]) -> f64 {
    let values: Vec<Vec<f64>> = points.iter().map(|p| field.eval(&p[..d], &p[d..])).collect();
    let mut best: f64 = 0.0;
    for a in 0..points.len() {
        for b in 0..a {
            let dp = crate::math::dist(&points[a], &points[b]);
            if dp > 0.0 {
                best = best.max(crate::math::dist(&values[a], &values[b]) / dp);
            }
        }
    }
    best
}

fn check(budget: usize, radius: f64) -> Result<(), DiagnosticsError> {
    if budget < 2 {
        return Err(DiagnosticsError::Parameter(alloc::format!("sample budget {budget} must be >= 2")));
    }
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(DiagnosticsError::Parameter(alloc::format!("ball radius {radius} must be >= 0")));
    }
    Ok(())
}

/// Sampled local Lipschitz constant of H_[μ] on the phase-space ball of
/// radius `ball_radius` around the origin.
pub fn lipschitz_probe(
    mu: &EmpiricalMeasure,
    model: &ModelSpec,
    ball_radius: f64,
    sample_budget: usize,
    seed: u64,
) -> Result<f64, DiagnosticsError> {
    check(sample_budget, ball_radius)?;
    let d = mu.dim();
    let mut points = unit_ball_points(d, sample_budget, seed);
    points.iter_mut().for_each(|p| p.iter_mut().for_each(|c| *c *= ball_radius));
    Ok(pairwise_max(&FieldEvaluator::new(mu, model), d, &points))
}

/// Probe values for increasing radii. The sample set for each radius
/// contains the samples of all smaller radii, so the profile is
/// non-decreasing.
pub fn lipschitz_profile(
    mu: &EmpiricalMeasure,
    model: &ModelSpec,
    radii: &[f64],
    sample_budget: usize,
    seed: u64,
) -> Result<Vec<f64>, DiagnosticsError> {
    let d = mu.dim();
    let field = FieldEvaluator::new(mu, model);
    let mut pool: Vec<Vec<f64>> = Vec::new();
    let mut out = vec![];
    let mut last = radii.first().copied().unwrap_or(0.0);
    for (k, &r) in radii.iter().enumerate() {
        check(sample_budget, r)?;
        if r < last {
            return Err(DiagnosticsError::Parameter("radii must be non-decreasing".into()));
        }
        last = r;
        let mut fresh = unit_ball_points(d, sample_budget, seed.wrapping_add(k as u64));
        fresh.iter_mut().for_each(|p| p.iter_mut().for_each(|c| *c *= r));
        pool.extend(fresh);
        out.push(pairwise_max(&field, d, &pool));
    }
    Ok(out)
}
