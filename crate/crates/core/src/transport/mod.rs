//! Exact optimal transport between discrete probability measures.

mod assignment;
mod bruteforce;
mod costs;
mod measure;
mod simplex;

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

#[allow(unused_imports)]
use crate::math::Float;
use crate::kinetic::EmpiricalMeasure;
use crate::math::compensated_sum;

pub use bruteforce::{w1_bruteforce, BRUTEFORCE_CAP};
pub use costs::DENSE_COST_LIMIT;
pub use measure::{DiscreteMeasure, GroundMetric, PlanEntry, TransportPlan, WEIGHT_SLACK};

use costs::Costs;

/// Largest combined atom count accepted by [`bounded_lipschitz`].
pub const BOUNDED_LIPSCHITZ_CAP: usize = 512;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("measure has no atoms or zero dimension")]
    Empty,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite coordinate in point {index}")]
    NonFinite { index: usize },
    #[error("weight {weight} of point {index} is not positive and finite")]
    Weight { index: usize, weight: f64 },
    #[error("total mass {0} is not 1")]
    Mass(f64),
    #[error("metric split {split} exceeds point dimension {dim}")]
    Metric { split: usize, dim: usize },
    #[error("problem size {size} exceeds the cap {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("internal solver error: {0}")]
    Internal(String),
}

/// Which exact solver [`w1_with`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// Identity shortcut, then assignment for equal uniform weights, else
    /// network simplex.
    #[default]
    Auto,
    NetworkSimplex,
    /// Only valid for m = n with all weights equal.
    Assignment,
}

pub(crate) fn check_pair(mu: &DiscreteMeasure, nu: &DiscreteMeasure, metric: GroundMetric) -> Result<(), TransportError> {
    if mu.dim() != nu.dim() {
        return Err(TransportError::Dimension { expected: mu.dim(), got: nu.dim() });
    }
    metric.validate(mu.dim())
}

/// W₁(μ, ν) under `metric`, with an optimal plan as certificate.
pub fn w1(mu: &DiscreteMeasure, nu: &DiscreteMeasure, metric: GroundMetric) -> Result<(f64, TransportPlan), TransportError> {
    w1_with(mu, nu, metric, Solver::Auto)
}

pub fn w1_with(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    metric: GroundMetric,
    solver: Solver,
) -> Result<(f64, TransportPlan), TransportError> {
    solve(mu, nu, metric, f64::INFINITY, solver)
}

fn solve(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    metric: GroundMetric,
    cap: f64,
    solver: Solver,
) -> Result<(f64, TransportPlan), TransportError> {
    check_pair(mu, nu, metric)?;
    let (m, n) = (mu.len(), nu.len());
    let equal_uniform = m == n && mu.is_uniform() && nu.is_uniform() && mu.weight(0) == nu.weight(0);
    if solver == Solver::Auto && mu == nu {
        let entries = (0..m).map(|i| PlanEntry { source: i, target: i, mass: mu.weight(i) }).collect();
        return Ok((0.0, TransportPlan { entries, cost: 0.0 }));
    }
    let costs = Costs::new(mu, nu, metric, cap);
    let flows: Vec<(usize, usize, f64)> = match solver {
        Solver::Auto if equal_uniform => assignment_flows(n, mu.weight(0), &costs),
        Solver::Assignment => {
            if !equal_uniform {
                return Err(TransportError::Internal("assignment solver needs equal uniform weights".into()));
            }
            assignment_flows(n, mu.weight(0), &costs)
        }
        _ => simplex::solve(mu.weights(), nu.weights(), &costs)?,
    };
    let cost = compensated_sum(flows.iter().map(|&(i, j, f)| f * costs.get(i, j)));
    let entries = flows.into_iter().map(|(source, target, mass)| PlanEntry { source, target, mass }).collect();
    Ok((cost, TransportPlan { entries, cost }))
}

fn assignment_flows(n: usize, w: f64, costs: &Costs<'_>) -> Vec<(usize, usize, f64)> {
    assignment::solve(n, costs).into_iter().enumerate().map(|(i, j)| (i, j, w)).collect()
}

/// Bounded-Lipschitz distance sup { ∫φ d(μ − ν) : |φ| ≤ 1, Lip(φ) ≤ 1 }.
///
/// Adding a constant to φ does not change the integral, so the box |φ| ≤ 1
/// may be replaced by an oscillation bound of 2, and the admissible φ are
/// exactly the 1-Lipschitz functions for the metric min(d, 2). By
/// Kantorovich–Rubinstein duality the value is W₁ under that truncated cost.
pub fn bounded_lipschitz(mu: &DiscreteMeasure, nu: &DiscreteMeasure, metric: GroundMetric) -> Result<f64, TransportError> {
    let size = mu.len() + nu.len();
    if size > BOUNDED_LIPSCHITZ_CAP {
        return Err(TransportError::TooLarge { size, cap: BOUNDED_LIPSCHITZ_CAP });
    }
    Ok(solve(mu, nu, metric, 2.0, Solver::Auto)?.0)
}

/// W₁(μ, ρ ⊗ δ_{v_ref}), where ρ is the position marginal of μ. Points are
/// (x, v) ∈ R^{2d}.
pub fn dirac_flocking_distance(mu: &EmpiricalMeasure, v_ref: &[f64], metric: GroundMetric) -> Result<f64, TransportError> {
    if v_ref.len() != mu.dim() {
        return Err(TransportError::Dimension { expected: mu.dim(), got: v_ref.len() });
    }
    let source = DiscreteMeasure::from_empirical(mu);
    let target = DiscreteMeasure::from_empirical(&mu.with_velocity(v_ref));
    Ok(w1(&source, &target, metric)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;
    use rand::Rng;

    fn line(points: &[f64], weights: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::new(1, points.to_vec(), weights.to_vec()).unwrap()
    }

    fn random_measure(rng: &mut impl Rng, n: usize, k: usize) -> DiscreteMeasure {
        let pts: Vec<f64> = (0..n * k).map(|_| rng.random_range(-2.0..2.0)).collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let mut w: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let rest = 1.0 - compensated_sum(w[..n - 1].iter().copied());
        w[n - 1] = rest;
        DiscreteMeasure::new(k, pts, w).unwrap()
    }

    fn check_plan(mu: &DiscreteMeasure, nu: &DiscreteMeasure, metric: GroundMetric, value: f64, plan: &TransportPlan) {
        for (r, w) in plan.row_sums(mu.len()).iter().zip(mu.weights()) {
            assert!((r - w).abs() <= 1e-10);
        }
        for (c, w) in plan.column_sums(nu.len()).iter().zip(nu.weights()) {
            assert!((c - w).abs() <= 1e-10);
        }
        assert!(plan.entries.iter().all(|e| e.mass > 0.0));
        assert!(plan.entries.len() < mu.len() + nu.len());
        assert!((plan.evaluate(mu, nu, metric) - value).abs() <= 1e-10);
        assert_eq!(plan.cost, value);
    }

    #[test]
    fn w1_examples() {
        let e = GroundMetric::Euclidean;
        assert_eq!(w1(&line(&[0.0], &[1.0]), &line(&[3.0], &[1.0]), e).unwrap().0, 3.0);
        let (v, plan) = w1(&line(&[0.0, 1.0], &[0.5, 0.5]), &line(&[0.0, 2.0], &[0.5, 0.5]), e).unwrap();
        assert_eq!(v, 0.5);
        assert_eq!(plan.entries.len(), 2);
        let mu = line(&[0.3, -1.0, 4.0], &[0.2, 0.3, 0.5]);
        assert_eq!(w1(&mu, &mu, e).unwrap().0, 0.0);
        assert_eq!(w1_with(&mu, &mu, e, Solver::NetworkSimplex).unwrap().0, 0.0);
    }

    #[test]
    fn bruteforce_examples() {
        let e = GroundMetric::Euclidean;
        let a = DiscreteMeasure::new(2, vec![0.0, 0.0], vec![1.0]).unwrap();
        let b = DiscreteMeasure::new(2, vec![3.0, 4.0], vec![1.0]).unwrap();
        assert_eq!(w1_bruteforce(&a, &b, e).unwrap(), 5.0);
        let many = DiscreteMeasure::new(2, vec![3.0, 4.0, 0.0, 1.0, -6.0, 8.0], vec![0.25, 0.25, 0.5]).unwrap();
        let expect = 0.25 * 5.0 + 0.25 * 1.0 + 0.5 * 10.0;
        assert!((w1_bruteforce(&a, &many, e).unwrap() - expect).abs() < 1e-15);
        let big = DiscreteMeasure::uniform(1, (0..9).map(f64::from).collect()).unwrap();
        assert!(matches!(w1_bruteforce(&big, &big, e), Err(TransportError::TooLarge { size: 81, cap: 64 })));
    }

    #[test]
    fn bounded_lipschitz_examples() {
        let e = GroundMetric::Euclidean;
        assert_eq!(bounded_lipschitz(&line(&[0.0], &[1.0]), &line(&[3.0], &[1.0]), e).unwrap(), 2.0);
        assert_eq!(bounded_lipschitz(&line(&[0.0], &[1.0]), &line(&[0.5], &[1.0]), e).unwrap(), 0.5);
        let mu = line(&[0.0, 9.0], &[0.5, 0.5]);
        assert_eq!(bounded_lipschitz(&mu, &mu, e).unwrap(), 0.0);
        let big = DiscreteMeasure::uniform(1, (0..300).map(f64::from).collect()).unwrap();
        assert!(bounded_lipschitz(&big, &big, e).is_err());
    }

    #[test]
    fn dirac_distance_examples() {
        let mu = EmpiricalMeasure::new(1, vec![0.0, 0.0], vec![1.0, -1.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(dirac_flocking_distance(&mu, &[0.0], GroundMetric::Euclidean).unwrap(), 1.0);
        let flat = EmpiricalMeasure::new(2, vec![0.0, 1.0, 2.0, 3.0], vec![0.5, 0.5, 0.5, 0.5], vec![0.5, 0.5]).unwrap();
        assert_eq!(dirac_flocking_distance(&flat, &[0.5, 0.5], GroundMetric::sum_of_norms(2)).unwrap(), 0.0);
    }

    #[test]
    fn input_validation() {
        assert!(matches!(DiscreteMeasure::new(1, vec![0.0, 1.0], vec![0.5, 0.6]), Err(TransportError::Mass(_))));
        assert!(matches!(DiscreteMeasure::new(1, vec![0.0], vec![-1.0]), Err(TransportError::Weight { .. })));
        let slack = DiscreteMeasure::new(1, vec![0.0, 1.0], vec![0.5, 0.5 + 5e-13]).unwrap();
        assert!((slack.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-16);
        let a = line(&[0.0], &[1.0]);
        let b = DiscreteMeasure::new(2, vec![0.0, 0.0], vec![1.0]).unwrap();
        assert!(matches!(w1(&a, &b, GroundMetric::Euclidean), Err(TransportError::Dimension { .. })));
        assert!(matches!(w1(&a, &a, GroundMetric::SumOfNorms { split: 2 }), Err(TransportError::Metric { .. })));
    }

    #[test]
    fn solvers_agree_on_equal_weight_instances() {
        let mut rng = crate::math::seeded_rng(7, 0);
        for n in [2usize, 5, 17, 60] {
            let mu = DiscreteMeasure::uniform(3, (0..3 * n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let nu = DiscreteMeasure::uniform(3, (0..3 * n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            for metric in [GroundMetric::Euclidean, GroundMetric::SumOfNorms { split: 1 }] {
                let (a, pa) = w1_with(&mu, &nu, metric, Solver::Assignment).unwrap();
                let (s, ps) = w1_with(&mu, &nu, metric, Solver::NetworkSimplex).unwrap();
                assert!((a - s).abs() <= 1e-10, "n={n}: {a} vs {s}");
                check_plan(&mu, &nu, metric, a, &pa);
                check_plan(&mu, &nu, metric, s, &ps);
            }
        }
    }

    #[test]
    fn larger_unbalanced_instance_is_feasible_and_stable() {
        let mut rng = crate::math::seeded_rng(11, 0);
        let mu = random_measure(&mut rng, 80, 2);
        let nu = random_measure(&mut rng, 130, 2);
        let (v, plan) = w1(&mu, &nu, GroundMetric::Euclidean).unwrap();
        check_plan(&mu, &nu, GroundMetric::Euclidean, v, &plan);
        let (back, _) = w1(&nu, &mu, GroundMetric::Euclidean).unwrap();
        assert!((v - back).abs() <= 1e-10);
    }

    #[test]
    fn degenerate_instances_terminate() {
        // Integer weights on a lattice produce many ties and zero-flow pivots.
        let pts: Vec<f64> = (0..40).map(|i| f64::from(i % 5)).collect();
        let mu = DiscreteMeasure::uniform(1, pts[..20].to_vec()).unwrap();
        let nu = DiscreteMeasure::uniform(1, pts[..40].iter().map(|x| 4.0 - x).collect()).unwrap();
        let (v, plan) = w1(&mu, &nu, GroundMetric::Euclidean).unwrap();
        check_plan(&mu, &nu, GroundMetric::Euclidean, v, &plan);
        assert!(v.abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn simplex_matches_bruteforce(seed in 0u64..10_000, m in 1usize..5, n in 1usize..5, sum in any::<bool>()) {
            let mut rng = crate::math::seeded_rng(seed, 3);
            let mu = random_measure(&mut rng, m, 2);
            let nu = random_measure(&mut rng, n, 2);
            let metric = if sum { GroundMetric::SumOfNorms { split: 1 } } else { GroundMetric::Euclidean };
            let (v, plan) = w1(&mu, &nu, metric).unwrap();
            let oracle = w1_bruteforce(&mu, &nu, metric).unwrap();
            prop_assert!((v - oracle).abs() <= 1e-9, "{} vs {}", v, oracle);
            check_plan(&mu, &nu, metric, v, &plan);
        }

        #[test]
        fn w1_metric_axioms(seed in 0u64..10_000) {
            let mut rng = crate::math::seeded_rng(seed, 4);
            let (a, b, c) = (random_measure(&mut rng, 4, 2), random_measure(&mut rng, 3, 2), random_measure(&mut rng, 5, 2));
            let e = GroundMetric::Euclidean;
            let d = |x: &DiscreteMeasure, y: &DiscreteMeasure| w1(x, y, e).unwrap().0;
            prop_assert_eq!(d(&a, &a), 0.0);
            prop_assert!((d(&a, &b) - d(&b, &a)).abs() <= 1e-10);
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-9);
        }

        #[test]
        fn bounded_lipschitz_is_dominated(seed in 0u64..10_000) {
            let mut rng = crate::math::seeded_rng(seed, 5);
            let mu = random_measure(&mut rng, 3, 1);
            let nu = random_measure(&mut rng, 4, 1);
            let bl = bounded_lipschitz(&mu, &nu, GroundMetric::Euclidean).unwrap();
            prop_assert!(bl <= w1(&mu, &nu, GroundMetric::Euclidean).unwrap().0 + 1e-12);
            prop_assert!(bl <= 2.0 + 1e-12);
            prop_assert!(bl >= 0.0);
        }

        #[test]
        fn ground_metrics_are_metrics(seed in 0u64..10_000, split in 0usize..4) {
            let mut rng = crate::math::seeded_rng(seed, 6);
            let p: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
            for metric in [GroundMetric::Euclidean, GroundMetric::SumOfNorms { split }] {
                let d = |i: usize, j: usize| metric.distance(&p[i], &p[j]);
                prop_assert_eq!(d(0, 0), 0.0);
                prop_assert_eq!(d(0, 1), d(1, 0));
                prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12);
            }
        }
    }
}
