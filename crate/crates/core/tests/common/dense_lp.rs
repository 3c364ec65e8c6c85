//! Dense linear programs used as oracles for the transport solvers.

use flock_core::transport::{DiscreteMeasure, GroundMetric};
use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};

/// Primal transport LP with every coupling entry as a variable and the
/// ground cost truncated at `cap`.
pub fn transport_lp(mu: &DiscreteMeasure, nu: &DiscreteMeasure, metric: GroundMetric, cap: f64) -> f64 {
    let (m, n) = (mu.len(), nu.len());
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = (0..m)
        .map(|i| {
            (0..n)
                .map(|j| lp.add_var(metric.distance(mu.point(i), nu.point(j)).min(cap), (0.0, f64::INFINITY)))
                .collect()
        })
        .collect();
    for (i, r) in vars.iter().enumerate() {
        let mut row = LinearExpr::empty();
        r.iter().for_each(|&v| row.add(v, 1.0));
        lp.add_constraint(row, ComparisonOp::Eq, mu.weight(i));
    }
    for j in 1..n {
        let mut col = LinearExpr::empty();
        vars.iter().for_each(|r| col.add(r[j], 1.0));
        lp.add_constraint(col, ComparisonOp::Eq, nu.weight(j));
    }
    lp.solve().expect("transport LP is feasible").objective()
}

/// Bounded-Lipschitz distance from its dual: maximize Σ a_i φ(p_i) − Σ b_j φ(q_j)
/// over potentials with |φ| ≤ 1 and |φ(z) − φ(z')| ≤ d(z, z') on the union
/// of both supports.
pub fn bounded_lipschitz_lp(mu: &DiscreteMeasure, nu: &DiscreteMeasure, metric: GroundMetric) -> f64 {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let mut points: Vec<&[f64]> = Vec::new();
    let mut vars = Vec::new();
    for i in 0..mu.len() {
        points.push(mu.point(i));
        vars.push(lp.add_var(mu.weight(i), (-1.0, 1.0)));
    }
    for j in 0..nu.len() {
        points.push(nu.point(j));
        vars.push(lp.add_var(-nu.weight(j), (-1.0, 1.0)));
    }
    for a in 0..points.len() {
        for b in 0..points.len() {
            if a != b {
                let mut e = LinearExpr::empty();
                e.add(vars[a], 1.0);
                e.add(vars[b], -1.0);
                lp.add_constraint(e, ComparisonOp::Le, metric.distance(points[a], points[b]));
            }
        }
    }
    lp.solve().expect("potential LP is feasible and bounded").objective()
}
