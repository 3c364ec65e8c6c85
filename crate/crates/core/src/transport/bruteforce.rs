//! Exhaustive W₁ for tiny instances, used as a test oracle.
//!
//! Every vertex of the transportation polytope is the flow of a spanning
//! tree of the complete bipartite graph, so enumerating all spanning trees
//! and keeping the cheapest feasible one gives the exact optimum. For m = n
//! with equal weights the vertices are the permutation matrices and a plain
//! permutation search is used instead.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::math::Float;

use super::{DiscreteMeasure, GroundMetric, TransportError};

/// Largest m·n accepted by [`w1_bruteforce`].
pub const BRUTEFORCE_CAP: usize = 64;

/// Negative tree flows down to this size are treated as zero.
const FEASIBILITY_SLACK: f64 = 1e-12;

pub fn w1_bruteforce(mu: &DiscreteMeasure, nu: &DiscreteMeasure, metric: GroundMetric) -> Result<f64, TransportError> {
    super::check_pair(mu, nu, metric)?;
    let (m, n) = (mu.len(), nu.len());
    if m * n > BRUTEFORCE_CAP {
        return Err(TransportError::TooLarge { size: m * n, cap: BRUTEFORCE_CAP });
    }
    let c: Vec<f64> = (0..m * n).map(|e| metric.distance(mu.point(e / n), nu.point(e % n))).collect();
    if m == n && mu.is_uniform() && nu.is_uniform() && mu.weight(0) == nu.weight(0) {
        return Ok(best_permutation(n, &c) / n as f64);
    }
    let mut search = TreeSearch {
        m,
        n,
        c: &c,
        a: mu.weights(),
        b: nu.weights(),
        dsu: Dsu::new(m + n),
        chosen: Vec::with_capacity(m + n - 1),
        best: f64::INFINITY,
        rest: vec![0.0; m + n],
        degree: vec![0; m + n],
        alive: vec![false; m + n - 1],
    };
    search.descend(0);
    if search.best.is_finite() {
        Ok(search.best)
    } else {
        Err(TransportError::Internal("no feasible spanning tree".into()))
    }
}

fn best_permutation(n: usize, c: &[f64]) -> f64 {
    fn go(row: usize, n: usize, c: &[f64], used: &mut [bool], acc: f64, best: &mut f64) {
        if row == n {
            *best = best.min(acc);
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                go(row + 1, n, c, used, acc + c[row * n + j], best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(0, n, c, &mut vec![false; n], 0.0, &mut best);
    best
}

/// Union–find with undo, no path compression.
struct Dsu {
    parent: Vec<usize>,
    size: Vec<usize>,
    history: Vec<(usize, usize)>,
}

impl Dsu {
    fn new(k: usize) -> Self {
        Self { parent: (0..k).collect(), size: vec![1; k], history: Vec::new() }
    }

    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            core::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        self.history.push((a, b));
        true
    }

    fn undo(&mut self) {
        let (a, b) = self.history.pop().expect("undo without union");
        self.parent[b] = b;
        self.size[a] -= self.size[b];
    }
}

struct TreeSearch<'a> {
    m: usize,
    n: usize,
    c: &'a [f64],
    a: &'a [f64],
    b: &'a [f64],
    dsu: Dsu,
    chosen: Vec<usize>,
    best: f64,
    rest: Vec<f64>,
    degree: Vec<usize>,
    alive: Vec<bool>,
}

impl TreeSearch<'_> {
    fn descend(&mut self, e: usize) {
        let need = self.m + self.n - 1;
        if self.chosen.len() == need {
            if let Some(cost) = self.tree_cost() {
                self.best = self.best.min(cost);
            }
            return;
        }
        let total = self.m * self.n;
        if e == total || self.chosen.len() + (total - e) < need {
            return;
        }
        let (i, j) = (e / self.n, e % self.n);
        if self.dsu.union(i, self.m + j) {
            self.chosen.push(e);
            self.descend(e + 1);
            self.chosen.pop();
            self.dsu.undo();
        }
        self.descend(e + 1);
    }

    /// Flow of the current tree by peeling leaves; `None` if infeasible.
    fn tree_cost(&mut self) -> Option<f64> {
        let (m, n) = (self.m, self.n);
        let Self { rest, degree, alive, .. } = self;
        rest[..m].copy_from_slice(self.a);
        rest[m..].copy_from_slice(self.b);
        degree.fill(0);
        for &e in &self.chosen {
            degree[e / n] += 1;
            degree[m + e % n] += 1;
        }
        alive.fill(true);
        let mut cost = 0.0;
        for _ in 0..self.chosen.len() {
            let (k, &e) = self
                .chosen
                .iter()
                .enumerate()
                .find(|&(k, &e)| alive[k] && (degree[e / n] == 1 || degree[m + e % n] == 1))?;
            let (s, t) = (e / n, m + e % n);
            let (leaf, other) = if degree[s] == 1 { (s, t) } else { (t, s) };
            let f = rest[leaf];
            if f < -FEASIBILITY_SLACK {
                return None;
            }
            rest[other] -= f;
            rest[leaf] = 0.0;
            degree[s] -= 1;
            degree[t] -= 1;
            alive[k] = false;
            cost += f.max(0.0) * self.c[e];
        }
        Some(cost)
    }
}
