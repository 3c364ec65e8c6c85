mod common {
    pub mod dense_lp;
}

use common::dense_lp::{bounded_lipschitz_lp, transport_lp};
use flock_core::math::seeded_rng;
use flock_core::transport::{bounded_lipschitz, w1, w1_bruteforce, DiscreteMeasure, GroundMetric};
use rand::Rng;

fn random_measure(rng: &mut impl Rng, n: usize, k: usize, grid: bool) -> DiscreteMeasure {
    let pts: Vec<f64> = (0..n * k)
        .map(|_| if grid { rng.random_range(-2i32..=2) as f64 } else { rng.random_range(-2.0..2.0) })
        .collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    DiscreteMeasure::new(k, pts, raw.iter().map(|w| w / s).collect()).unwrap()
}

const METRICS: [GroundMetric; 2] = [GroundMetric::Euclidean, GroundMetric::SumOfNorms { split: 1 }];

#[test]
fn w1_matches_both_oracles_on_small_shapes() {
    let mut rng = seeded_rng(11, 0);
    for m in 1..=5 {
        for n in 1..=5 {
            for metric in METRICS {
                for trial in 0..6 {
                    let grid = trial % 2 == 1;
                    let mu = random_measure(&mut rng, m, 2, grid);
                    let nu = random_measure(&mut rng, n, 2, grid);
                    let fast = w1(&mu, &nu, metric).unwrap().0;
                    let brute = w1_bruteforce(&mu, &nu, metric).unwrap();
                    let lp = transport_lp(&mu, &nu, metric, f64::INFINITY);
                    assert!((fast - brute).abs() <= 1e-9, "{m}x{n} {metric:?}: {fast} vs {brute}");
                    assert!((fast - lp).abs() <= 1e-9, "{m}x{n} {metric:?}: {fast} vs LP {lp}");
                }
            }
        }
    }
}

#[test]
fn bounded_lipschitz_matches_dual_and_primal_lp() {
    let mut rng = seeded_rng(12, 0);
    for m in 1..=5 {
        for n in 1..=(8 - m).min(5) {
            for metric in METRICS {
                for _ in 0..6 {
                    // Wide spread so that the truncation at 2 is active.
                    let mu = random_measure(&mut rng, m, 2, false);
                    let mut nu = random_measure(&mut rng, n, 2, false);
                    if rng.random_bool(0.5) {
                        let pts: Vec<f64> = (0..n).flat_map(|j| nu.point(j).iter().map(|c| c * 2.0).collect::<Vec<_>>()).collect();
                        nu = DiscreteMeasure::new(2, pts, nu.weights().to_vec()).unwrap();
                    }
                    let bl = bounded_lipschitz(&mu, &nu, metric).unwrap();
                    let dual = bounded_lipschitz_lp(&mu, &nu, metric);
                    let primal = transport_lp(&mu, &nu, metric, 2.0);
                    assert!((bl - dual).abs() <= 1e-9, "{m}x{n} {metric:?}: {bl} vs dual {dual}");
                    assert!((bl - primal).abs() <= 1e-9, "{m}x{n} {metric:?}: {bl} vs primal {primal}");
                }
            }
        }
    }
}

#[test]
fn identical_measures_have_zero_distance() {
    let mut rng = seeded_rng(13, 0);
    for metric in METRICS {
        let mu = random_measure(&mut rng, 5, 2, false);
        assert_eq!(w1(&mu, &mu, metric).unwrap().0, 0.0);
        assert_eq!(bounded_lipschitz(&mu, &mu, metric).unwrap(), 0.0);
    }
}
