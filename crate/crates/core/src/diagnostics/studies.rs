use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

#[allow(unused_imports)]
use crate::math::Float;
use crate::dynamics::{integrate, IntegratorConfig, ParticleState, Trajectory};
use crate::kinetic::{sample_initial, EmpiricalMeasure, InitialSpec};
use crate::math::{norm_sq, seeded_rng};
use crate::model::ModelSpec;
use crate::transport::{dirac_flocking_distance, w1, DiscreteMeasure, GroundMetric};

use super::DiagnosticsError;

const PERTURBATION_STREAM: u64 = 0x7065_7274;

/// Runs both closures, concurrently when the `parallel` feature is on.
fn join<A: Send, B: Send>(a: impl FnOnce() -> A + Send, b: impl FnOnce() -> B + Send) -> (A, B) {
    #[cfg(feature = "parallel")]
    {
        rayon::join(a, b)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (a(), b())
    }
}

fn map_all<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Config that stops at the largest requested time and hits every one.
fn config_through(config: &IntegratorConfig, times: &[f64]) -> IntegratorConfig {
    let mut c = config.clone();
    c.t_end = times.iter().copied().fold(0.0, f64::max);
    c.checkpoints.extend_from_slice(times);
    c
}

fn state_at(traj: &Trajectory, t: f64) -> Result<&ParticleState, DiagnosticsError> {
    traj.at(t).map(|s| &s.state).ok_or(DiagnosticsError::MissingTime(t))
}

fn phase_measure(state: &ParticleState) -> DiscreteMeasure {
    DiscreteMeasure::from_empirical(&EmpiricalMeasure::from_particles(state))
}

/// `state` with every velocity moved by an independent vector drawn
/// uniformly from the ball of radius `delta`.
pub fn perturb_velocities(state: &ParticleState, delta: f64, seed: u64) -> ParticleState {
    let mut out = state.clone();
    if delta == 0.0 {
        return out;
    }
    let d = state.dim();
    let mut rng = seeded_rng(seed, PERTURBATION_STREAM);
    let mut dir = vec![0.0; d];
    for i in 0..state.len() {
        for c in dir.iter_mut() {
            *c = rng.sample(StandardNormal);
        }
        let norm = norm_sq(&dir).sqrt();
        let u: f64 = rng.random();
        let r = delta * u.powf(1.0 / d as f64);
        for (k, c) in dir.iter().enumerate() {
            if norm > 0.0 {
                *out.v_mut(i, k) += r * c / norm;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityPoint {
    pub t: f64,
    pub distance: f64,
    /// distance / distance at t = 0 (0 when both vanish).
    pub ratio: f64,
    /// max of `ratio` over earlier times.
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub perturbation: f64,
    pub initial_distance: f64,
    pub series: Vec<StabilityPoint>,
    /// Smallest c with ratio(t) ≤ e^{ct} at every t > 0.
    pub growth_rate: f64,
}

/// Integrates f₀ and its velocity perturbation g₀ with the same config and
/// reports W₁(f_t, g_t) on phase space at each requested time.
pub fn stability_study(
    f0_spec: &InitialSpec,
    perturbation: f64,
    perturbation_seed: u64,
    model: &ModelSpec,
    config: &IntegratorConfig,
    times: &[f64],
    metric: GroundMetric,
) -> Result<StabilityReport, DiagnosticsError> {
    if !(perturbation >= 0.0 && perturbation.is_finite()) {
        return Err(DiagnosticsError::Parameter(alloc::format!("perturbation {perturbation} must be >= 0")));
    }
    let f0 = sample_initial(f0_spec)?;
    let g0 = perturb_velocities(&f0, perturbation, perturbation_seed);
    let mut times: Vec<f64> = times.to_vec();
    if !times.contains(&0.0) {
        times.push(0.0);
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    let cfg = config_through(config, &times);
    let (f, g) = join(|| integrate(&f0, model, &cfg), || integrate(&g0, model, &cfg));
    let (f, g) = (f?, g?);
    let distances = map_all(&times, |&t| -> Result<f64, DiagnosticsError> {
        let (a, b) = (state_at(&f, t)?, state_at(&g, t)?);
        Ok(w1(&phase_measure(a), &phase_measure(b), metric)?.0)
    });
    let distances: Vec<f64> = distances.into_iter().collect::<Result<_, _>>()?;
    let w0 = distances[0];
    let mut envelope: f64 = 0.0;
    let mut growth: f64 = 0.0;
    let mut series = Vec::with_capacity(times.len());
    for (&t, &distance) in times.iter().zip(&distances) {
        let ratio = if distance == 0.0 { 0.0 } else { distance / w0 };
        envelope = envelope.max(ratio);
        if t > 0.0 && ratio > 0.0 {
            growth = growth.max(ratio.ln() / t);
        }
        series.push(StabilityPoint { t, distance, ratio, envelope });
    }
    Ok(StabilityReport { perturbation, initial_distance: w0, series, growth_rate: growth })
}

/// How clouds are compared in [`meanfield_study`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pairing {
    /// Every N against the largest N.
    #[default]
    AgainstLargest,
    /// Each N against the next larger one.
    Consecutive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    /// Size of the cloud it is compared with.
    pub reference_n: usize,
    pub t: f64,
    pub distance: f64,
    /// Wall time of the simulation of size `n` (NaN without `std`).
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub reference: String,
}

impl ConvergenceTable {
    /// Distances at time `t`, in row order (increasing N).
    pub fn column(&self, t: f64) -> Vec<f64> {
        self.rows.iter().filter(|r| r.t == t).map(|r| r.distance).collect()
    }

    /// Entry-wise mean of tables with identical layout.
    pub fn average(tables: &[ConvergenceTable]) -> Result<ConvergenceTable, DiagnosticsError> {
        let first = tables.first().ok_or(DiagnosticsError::Parameter("no tables to average".into()))?;
        let mut rows = first.rows.clone();
        for (k, row) in rows.iter_mut().enumerate() {
            let mut dist = 0.0;
            let mut wall = 0.0;
            for t in tables {
                let r = t.rows.get(k).filter(|r| r.n == row.n && r.t == row.t).ok_or(
                    DiagnosticsError::Parameter("tables have different layouts".into()),
                )?;
                dist += r.distance;
                wall += r.wall_seconds;
            }
            row.distance = dist / tables.len() as f64;
            row.wall_seconds = wall / tables.len() as f64;
        }
        Ok(ConvergenceTable { rows, reference: alloc::format!("mean over {} seeds; {}", tables.len(), first.reference) })
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    #[cfg(feature = "std")]
    {
        let start = std::time::Instant::now();
        let out = f();
        (out, start.elapsed().as_secs_f64())
    }
    #[cfg(not(feature = "std"))]
    {
        (f(), f64::NAN)
    }
}

/// Particle clouds of increasing size drawn as prefixes of one stream,
/// integrated to each `t_eval` and compared in W₁ on phase space. The
/// largest cloud stands in for the unknown kinetic solution.
pub fn meanfield_study(
    f0_spec: &InitialSpec,
    ns: &[usize],
    model: &ModelSpec,
    config: &IntegratorConfig,
    t_eval: &[f64],
    pairing: Pairing,
    metric: GroundMetric,
) -> Result<ConvergenceTable, DiagnosticsError> {
    if ns.len() < 3 || ns.windows(2).any(|w| w[0] >= w[1]) || ns[0] == 0 {
        return Err(DiagnosticsError::Parameter("N list must be strictly increasing with at least 3 entries".into()));
    }
    if t_eval.is_empty() {
        return Err(DiagnosticsError::Parameter("no evaluation times".into()));
    }
    let cfg = config_through(config, t_eval);
    let runs = map_all(ns, |&n| -> Result<(Trajectory, f64), DiagnosticsError> {
        let s = sample_initial(&f0_spec.with_n(n))?;
        let (traj, wall) = timed(|| integrate(&s, model, &cfg));
        Ok((traj?, wall))
    });
    let runs: Vec<(Trajectory, f64)> = runs.into_iter().collect::<Result<_, _>>()?;
    let largest = ns.len() - 1;
    let mut jobs = Vec::new();
    for &t in t_eval {
        for k in 0..largest {
            let r = match pairing {
                Pairing::AgainstLargest => largest,
                Pairing::Consecutive => k + 1,
            };
            jobs.push((t, k, r));
        }
    }
    let rows = map_all(&jobs, |&(t, k, r)| -> Result<ConvergenceRow, DiagnosticsError> {
        let a = phase_measure(state_at(&runs[k].0, t)?);
        let b = phase_measure(state_at(&runs[r].0, t)?);
        Ok(ConvergenceRow { n: ns[k], reference_n: ns[r], t, distance: w1(&a, &b, metric)?.0, wall_seconds: runs[k].1 })
    });
    let rows = rows.into_iter().collect::<Result<_, _>>()?;
    let reference = match pairing {
        Pairing::AgainstLargest => alloc::format!("largest cloud N = {} as reference", ns[largest]),
        Pairing::Consecutive => "consecutive N pairs".into(),
    };
    Ok(ConvergenceTable { rows, reference })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlockingPoint {
    pub t: f64,
    /// W₁(f_t, ρ_t ⊗ δ_{V₁(0)}).
    pub distance: f64,
    pub sqrt_gf: f64,
}

/// Distance of every snapshot to its position marginal times a Dirac mass
/// at the initial mean velocity, next to √Gf.
pub fn flocking_study(traj: &Trajectory, metric: GroundMetric) -> Result<Vec<FlockingPoint>, DiagnosticsError> {
    let v_ref = traj.first().ok_or(DiagnosticsError::EmptyTrajectory)?.moments.v1.clone();
    let points = map_all(&traj.snapshots, |s| -> Result<FlockingPoint, DiagnosticsError> {
        let mu = EmpiricalMeasure::from_particles(&s.state);
        Ok(FlockingPoint {
            t: s.time,
            distance: dirac_flocking_distance(&mu, &v_ref, metric)?,
            sqrt_gf: s.moments.gf.max(0.0).sqrt(),
        })
    });
    points.into_iter().collect()
}
