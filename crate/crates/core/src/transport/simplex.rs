//! Primal network simplex for the dense transportation problem.
//!
//! Sources are nodes `0..m`, sinks `m..m+n`. The basis is a spanning tree of
//! `m + n − 1` arcs started from the north-west-corner rule. After a pivot
//! the tree is re-rooted at node 0 by a traversal that also recomputes the
//! potentials, which costs O(m + n) and keeps the code free of incremental
//! thread-index bookkeeping. Entering arcs come from block pricing; after a
//! long run of degenerate pivots the solver falls back to Bland's rule,
//! which cannot cycle.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::math::Float;

use super::costs::Costs;
use super::TransportError;

#[derive(Debug, Clone, Copy)]
struct Arc {
    i: usize,
    j: usize,
    flow: f64,
}

const NONE: usize = usize::MAX;

struct Tree<'c> {
    m: usize,
    n: usize,
    costs: &'c Costs<'c>,
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
    basic: Vec<bool>,
    u: Vec<f64>,
    v: Vec<f64>,
    parent: Vec<usize>,
    parent_arc: Vec<usize>,
    depth: Vec<usize>,
    stack: Vec<usize>,
}

impl<'c> Tree<'c> {
    fn north_west(a: &[f64], b: &[f64], costs: &'c Costs<'c>) -> Self {
        let (m, n) = (a.len(), b.len());
        let mut arcs = Vec::with_capacity(m + n - 1);
        let (mut i, mut j) = (0, 0);
        let (mut ra, mut rb) = (a[0], b[0]);
        loop {
            let f = ra.min(rb).max(0.0);
            arcs.push(Arc { i, j, flow: f });
            ra -= f;
            rb -= f;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if j == n - 1 || (i < m - 1 && ra <= rb) {
                i += 1;
                ra = a[i];
            } else {
                j += 1;
                rb = b[j];
            }
        }
        let mut tree = Self {
            m,
            n,
            costs,
            adj: vec![Vec::new(); m + n],
            basic: vec![false; m * n],
            u: vec![0.0; m],
            v: vec![0.0; n],
            parent: vec![NONE; m + n],
            parent_arc: vec![NONE; m + n],
            depth: vec![0; m + n],
            stack: Vec::with_capacity(m + n),
            arcs,
        };
        for idx in 0..tree.arcs.len() {
            tree.link(idx);
        }
        tree.rebuild();
        tree
    }

    fn link(&mut self, idx: usize) {
        let Arc { i, j, .. } = self.arcs[idx];
        self.adj[i].push(idx);
        self.adj[self.m + j].push(idx);
        self.basic[i * self.n + j] = true;
    }

    fn unlink(&mut self, idx: usize) {
        let Arc { i, j, .. } = self.arcs[idx];
        for node in [i, self.m + j] {
            let list = &mut self.adj[node];
            let at = list.iter().position(|&x| x == idx).expect("arc is linked");
            list.swap_remove(at);
        }
        self.basic[i * self.n + j] = false;
    }

    /// Re-roots the tree at node 0 and recomputes u_i + v_j = c_ij on the basis.
    fn rebuild(&mut self) {
        let m = self.m;
        self.parent.fill(NONE);
        self.parent[0] = 0;
        self.depth[0] = 0;
        self.u[0] = 0.0;
        self.stack.clear();
        self.stack.push(0);
        while let Some(p) = self.stack.pop() {
            for k in 0..self.adj[p].len() {
                let idx = self.adj[p][k];
                let Arc { i, j, .. } = self.arcs[idx];
                let q = if p < m { m + j } else { i };
                if self.parent[q] != NONE {
                    continue;
                }
                self.parent[q] = p;
                self.parent_arc[q] = idx;
                self.depth[q] = self.depth[p] + 1;
                let c = self.costs.get(i, j);
                if p < m {
                    self.v[j] = c - self.u[i];
                } else {
                    self.u[i] = c - self.v[j];
                }
                self.stack.push(q);
            }
        }
    }

    #[inline]
    fn reduced(&self, i: usize, j: usize) -> f64 {
        self.costs.get(i, j) - self.u[i] - self.v[j]
    }
}

struct Pricing {
    block: usize,
    next: usize,
}

impl Pricing {
    /// Most negative reduced cost inside the first block, scanning cyclically
    /// from the last position, that contains any arc below `-eps`.
    fn block_search(&mut self, tree: &Tree<'_>, eps: f64) -> Option<(usize, usize)> {
        let total = tree.m * tree.n;
        let mut best = -eps;
        let mut found = None;
        let mut seen = 0;
        let mut in_block = 0;
        let mut e = self.next;
        while seen < total {
            let (i, j) = (e / tree.n, e % tree.n);
            if !tree.basic[e] {
                let r = tree.reduced(i, j);
                if r < best {
                    best = r;
                    found = Some((i, j));
                }
            }
            seen += 1;
            in_block += 1;
            e += 1;
            if e == total {
                e = 0;
            }
            if in_block == self.block {
                if found.is_some() {
                    break;
                }
                in_block = 0;
            }
        }
        self.next = e;
        found
    }

    /// Lowest-index arc with negative reduced cost.
    fn bland(tree: &Tree<'_>, eps: f64) -> Option<(usize, usize)> {
        (0..tree.m * tree.n)
            .find(|&e| !tree.basic[e] && tree.reduced(e / tree.n, e % tree.n) < -eps)
            .map(|e| (e / tree.n, e % tree.n))
    }
}

/// Optimal basic flows `(i, j, mass)` with `mass > 0`.
pub(crate) fn solve(a: &[f64], b: &[f64], costs: &Costs<'_>) -> Result<Vec<(usize, usize, f64)>, TransportError> {
    let (m, n) = (a.len(), b.len());
    if m == 1 || n == 1 {
        return Ok(if m == 1 { (0..n).map(|j| (0, j, b[j])).collect() } else { (0..m).map(|i| (i, 0, a[i])).collect() });
    }
    let eps = 1e-12 * (1.0 + costs.max_abs());
    let mut tree = Tree::north_west(a, b, costs);
    let mut pricing = Pricing { block: ((m * n) as f64).sqrt().ceil().max(32.0) as usize, next: 0 };
    let max_pivots = 64 * (m + n) * m.max(n) + 10_000;
    let degenerate_limit = (m + n).max(100);
    let mut degenerate_run = 0;
    let mut bland = false;
    let mut cycle: Vec<(usize, bool)> = Vec::with_capacity(m + n);

    for _ in 0..max_pivots {
        let entering = if bland { Pricing::bland(&tree, eps) } else { pricing.block_search(&tree, eps) };
        let Some((ie, je)) = entering else {
            return Ok(tree.arcs.iter().filter(|a| a.flow > 0.0).map(|a| (a.i, a.j, a.flow)).collect());
        };

        // Cycle: entering arc i→j (+), then the tree path from j back to i.
        // An arc traversed from its sink end loses flow.
        cycle.clear();
        let (mut s, mut t) = (ie, m + je);
        let mut down = Vec::new();
        while s != t {
            if tree.depth[s] >= tree.depth[t] {
                down.push((tree.parent_arc[s], s < m));
                s = tree.parent[s];
            } else {
                cycle.push((tree.parent_arc[t], t >= m));
                t = tree.parent[t];
            }
        }
        cycle.extend(down.into_iter().rev());

        let mut leave = NONE;
        let mut theta = f64::INFINITY;
        for &(idx, minus) in &cycle {
            if !minus {
                continue;
            }
            let f = tree.arcs[idx].flow;
            let better = f < theta
                || (bland && f == theta && {
                    let (x, y) = (tree.arcs[idx], tree.arcs[leave]);
                    (x.i, x.j) < (y.i, y.j)
                });
            if better {
                theta = f;
                leave = idx;
            }
        }
        if leave == NONE {
            return Err(TransportError::Internal("unbounded pivot cycle".into()));
        }
        for &(idx, minus) in &cycle {
            let arc = &mut tree.arcs[idx];
            arc.flow = if minus { (arc.flow - theta).max(0.0) } else { arc.flow + theta };
        }
        tree.unlink(leave);
        tree.arcs[leave] = Arc { i: ie, j: je, flow: theta };
        tree.link(leave);
        tree.rebuild();

        if theta == 0.0 {
            degenerate_run += 1;
            if degenerate_run > degenerate_limit {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }
    }
    Err(TransportError::Internal(alloc::format!("network simplex exceeded {max_pivots} pivots")))
}
