//! Characteristics of the mean-field field generated by a stored trajectory.
//!
//! Between two snapshots the measure is reconstructed either by holding the
//! earlier snapshot or by cubic Hermite interpolation of every atom, using the
//! stored positions, velocities and the accelerations recomputed from each
//! snapshot. The characteristic ODE is then integrated with fixed RK4
//! substeps no longer than `config.dt`, breaking at every snapshot time.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

#[allow(unused_imports)]
use crate::math::Float;
use crate::dynamics::{accelerations, Trajectory};
use crate::model::ModelSpec;

use super::{EmpiricalMeasure, FieldEvaluator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    /// Piecewise constant: the snapshot at or before the current time.
    Hold,
    /// Cubic Hermite in time for each atom.
    #[default]
    Hermite,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CharacteristicError {
    #[error("trajectory has no snapshots")]
    EmptyTrajectory,
    #[error("time {t} outside the trajectory range [{start}, {end}]")]
    Range { t: f64, start: f64, end: f64 },
    #[error("seed has dimension {got}, trajectory has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("step size must be positive and finite, got {0}")]
    Step(f64),
    #[error("non-finite seed coordinate")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

/// Frozen measure flow t ↦ μ(t) read from a trajectory.
pub struct MeasureFlow<'a> {
    traj: &'a Trajectory,
    interpolation: Interpolation,
    /// Per snapshot, accelerations in structure-of-arrays layout.
    acc: Vec<Vec<f64>>,
    scratch: EmpiricalMeasure,
}

impl<'a> MeasureFlow<'a> {
    pub fn new(traj: &'a Trajectory, model: &ModelSpec, interpolation: Interpolation) -> Result<Self, CharacteristicError> {
        let first = traj.first().ok_or(CharacteristicError::EmptyTrajectory)?;
        let acc = match interpolation {
            Interpolation::Hold => Vec::new(),
            Interpolation::Hermite => traj.snapshots.iter().map(|s| accelerations(&s.state, model)).collect(),
        };
        Ok(Self { traj, interpolation, acc, scratch: EmpiricalMeasure::from_particles(&first.state) })
    }

    pub fn start(&self) -> f64 {
        self.traj.snapshots[0].time
    }

    pub fn end(&self) -> f64 {
        self.traj.snapshots[self.traj.len() - 1].time
    }

    /// Index `k` of the interval [t_k, t_{k+1}] containing `t` (the last
    /// interval is closed on the right).
    fn interval(&self, t: f64) -> usize {
        let snaps = &self.traj.snapshots;
        if snaps.len() < 2 {
            return 0;
        }
        let k = snaps.partition_point(|s| s.time <= t);
        k.saturating_sub(1).min(snaps.len() - 2)
    }

    /// μ(t) with `t` known to lie in interval `k`.
    fn measure_in(&mut self, k: usize, t: f64) -> &EmpiricalMeasure {
        let snaps = &self.traj.snapshots;
        let a = &snaps[k];
        let n = a.state.len();
        let d = a.state.dim();
        if snaps.len() < 2 || self.interpolation == Interpolation::Hold || t == a.time {
            self.scratch = EmpiricalMeasure::from_particles(&a.state);
            return &self.scratch;
        }
        let b = &snaps[k + 1];
        let h = b.time - a.time;
        let s = (t - a.time) / h;
        let (h00, h10, h01, h11) = hermite_basis(s);
        let (aa, ab) = (&self.acc[k], &self.acc[k + 1]);
        let mut xs = vec![0.0; n * d];
        let mut vs = vec![0.0; n * d];
        for i in 0..n {
            for c in 0..d {
                let (xa, xb) = (a.state.x(i, c), b.state.x(i, c));
                let (va, vb) = (a.state.v(i, c), b.state.v(i, c));
                xs[i * d + c] = h00 * xa + h10 * h * va + h01 * xb + h11 * h * vb;
                vs[i * d + c] = h00 * va + h10 * h * aa[c * n + i] + h01 * vb + h11 * h * ab[c * n + i];
            }
        }
        let w = 1.0 / n as f64;
        self.scratch = EmpiricalMeasure { d, xs, vs, ws: vec![w; n] };
        &self.scratch
    }
}

fn hermite_basis(s: f64) -> (f64, f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2)
}

/// Characteristic from (x0, v0) at the first snapshot time up to the last
/// one, sampled at every snapshot time.
pub fn flow_characteristic(
    traj: &Trajectory,
    model: &ModelSpec,
    x0: &[f64],
    v0: &[f64],
    dt: f64,
) -> Result<Vec<PathPoint>, CharacteristicError> {
    let first = traj.first().ok_or(CharacteristicError::EmptyTrajectory)?;
    let last = traj.last().ok_or(CharacteristicError::EmptyTrajectory)?;
    flow_characteristic_between(traj, model, x0, v0, first.time, last.time, dt, Interpolation::Hermite)
}

/// Characteristic through (x0, v0) at `t_start`, integrated to `t_end`
/// (forwards or backwards). The path holds the seed, every snapshot time
/// strictly between the two ends, and the end point.
#[allow(clippy::too_many_arguments)]
pub fn flow_characteristic_between(
    traj: &Trajectory,
    model: &ModelSpec,
    x0: &[f64],
    v0: &[f64],
    t_start: f64,
    t_end: f64,
    dt: f64,
    interpolation: Interpolation,
) -> Result<Vec<PathPoint>, CharacteristicError> {
    let mut flow = MeasureFlow::new(traj, model, interpolation)?;
    let d = traj.snapshots[0].state.dim();
    for len in [x0.len(), v0.len()] {
        if len != d {
            return Err(CharacteristicError::Dimension { expected: d, got: len });
        }
    }
    if !x0.iter().chain(v0).all(|c| c.is_finite()) {
        return Err(CharacteristicError::NonFinite);
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(CharacteristicError::Step(dt));
    }
    let (start, end) = (flow.start(), flow.end());
    for t in [t_start, t_end] {
        if !(t >= start && t <= end) {
            return Err(CharacteristicError::Range { t, start, end });
        }
    }

    let forward = t_end >= t_start;
    let mut breaks: Vec<f64> = traj
        .times()
        .into_iter()
        .filter(|&t| if forward { t > t_start && t < t_end } else { t < t_start && t > t_end })
        .collect();
    if !forward {
        breaks.reverse();
    }
    breaks.push(t_end);

    let mut y: Vec<f64> = x0.iter().chain(v0).copied().collect();
    let mut t = t_start;
    let mut path = vec![PathPoint { t, x: x0.to_vec(), v: v0.to_vec() }];
    let mut stepper = CharacteristicRk4::new(d);
    for &b in &breaks {
        if b == t {
            continue;
        }
        let k = flow.interval(0.5 * (t + b));
        let m = ((b - t).abs() / dt).ceil().max(1.0) as usize;
        let h = (b - t) / m as f64;
        for j in 0..m {
            let tj = t + j as f64 * h;
            stepper.step(&mut flow, model, k, tj, h, &mut y);
        }
        t = b;
        path.push(PathPoint { t, x: y[..d].to_vec(), v: y[d..].to_vec() });
    }
    Ok(path)
}

struct CharacteristicRk4 {
    d: usize,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl CharacteristicRk4 {
    fn new(d: usize) -> Self {
        Self { d, k: [vec![0.0; 2 * d], vec![0.0; 2 * d], vec![0.0; 2 * d], vec![0.0; 2 * d]], tmp: vec![0.0; 2 * d] }
    }

    fn rhs(flow: &mut MeasureFlow<'_>, model: &ModelSpec, interval: usize, t: f64, y: &[f64], d: usize, out: &mut [f64]) {
        let mu = flow.measure_in(interval, t);
        out[..d].copy_from_slice(&y[d..]);
        FieldEvaluator::new(mu, model).eval_into(&y[..d], &y[d..], &mut out[d..]);
    }

    fn step(&mut self, flow: &mut MeasureFlow<'_>, model: &ModelSpec, interval: usize, t: f64, h: f64, y: &mut [f64]) {
        let d = self.d;
        let [k1, k2, k3, k4] = &mut self.k;
        Self::rhs(flow, model, interval, t, y, d, k1);
        for (o, (a, b)) in self.tmp.iter_mut().zip(y.iter().zip(k1.iter())) {
            *o = a + 0.5 * h * b;
        }
        Self::rhs(flow, model, interval, t + 0.5 * h, &self.tmp, d, k2);
        for (o, (a, b)) in self.tmp.iter_mut().zip(y.iter().zip(k2.iter())) {
            *o = a + 0.5 * h * b;
        }
        Self::rhs(flow, model, interval, t + 0.5 * h, &self.tmp, d, k3);
        for (o, (a, b)) in self.tmp.iter_mut().zip(y.iter().zip(k3.iter())) {
            *o = a + h * b;
        }
        Self::rhs(flow, model, interval, t + h, &self.tmp, d, k4);
        for c in 0..2 * d {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
    }
}
