//! Classical RK4 with step-doubling error control.
//!
//! Every attempt takes one step of size h and two of size h/2 from the same
//! start; the Richardson estimate |y_{h/2} − y_h| / 15 bounds the local error
//! of the two-half-step result, which is the one accepted. One attempt costs
//! eleven force evaluations (the first stage is shared).

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

#[allow(unused_imports)]
use crate::math::Float;
use crate::kinetic::{moments_of_state, MomentSet};
use crate::model::ModelSpec;

use super::force::accelerations_into;
use super::ParticleState;

/// Smallest admissible step relative to the base step.
pub const MIN_STEP_FRACTION: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    /// Base (and maximal) step size.
    pub dt: f64,
    /// Final simulation time.
    pub t_end: f64,
    /// Maximal accepted local error estimate (max-norm over all coordinates).
    pub error_tol: f64,
    pub max_steps: usize,
    /// Accepted steps between two recorded snapshots.
    pub observer_stride: usize,
    /// Extra times that are hit exactly and always recorded.
    pub checkpoints: Vec<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_end: 1.0,
            error_tol: 1e-10,
            max_steps: 1_000_000,
            observer_stride: 10,
            checkpoints: Vec::new(),
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), IntegrationError> {
        let bad = |m: &str| Err(IntegrationError::InvalidConfig(m.into()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be > 0");
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be >= 0");
        }
        if !(self.error_tol > 0.0) {
            return bad("error_tol must be > 0");
        }
        if self.observer_stride == 0 {
            return bad("observer_stride must be >= 1");
        }
        if self.checkpoints.iter().any(|t| !t.is_finite()) {
            return bad("checkpoints must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid initial state: {0}")]
    InvalidState(#[from] super::StateError),
    #[error("step underflow at t = {time}: step {step:e} with error estimate {error:e}")]
    StepUnderflow { time: f64, step: f64, error: f64, partial: Option<Box<Trajectory>> },
    #[error("max_steps = {steps} exceeded at t = {time}")]
    MaxSteps { steps: usize, time: f64, partial: Box<Trajectory> },
}

impl IntegrationError {
    /// Trajectory recorded before the failure, if any.
    pub fn partial(&self) -> Option<&Trajectory> {
        match self {
            IntegrationError::StepUnderflow { partial, .. } => partial.as_deref(),
            IntegrationError::MaxSteps { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

/// Outcome of one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub step: f64,
    pub error: f64,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub state: ParticleState,
    pub moments: MomentSet,
}

impl Snapshot {
    pub fn of(state: &ParticleState) -> Self {
        Self { time: state.time, state: state.clone(), moments: moments_of_state(state) }
    }
}

/// Snapshots at strictly increasing times, starting with the initial state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn first(&self) -> Option<&Snapshot> {
        self.snapshots.first()
    }

    pub fn last(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }

    /// Snapshot recorded at exactly time `t`.
    pub fn at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.time == t)
    }

    fn push(&mut self, state: &ParticleState) {
        if self.snapshots.last().is_none_or(|s| s.time < state.time) {
            self.snapshots.push(Snapshot::of(state));
        }
    }
}

/// Scratch buffers for one RK4 step.
struct Rk4Workspace {
    rows: Vec<f64>,
    a2: Vec<f64>,
    a3: Vec<f64>,
    a4: Vec<f64>,
    v2: Vec<f64>,
    v3: Vec<f64>,
    stage: ParticleState,
}

impl Rk4Workspace {
    fn new(template: &ParticleState) -> Self {
        let len = template.len() * template.dim();
        Self {
            rows: vec![0.0; len],
            a2: vec![0.0; len],
            a3: vec![0.0; len],
            a4: vec![0.0; len],
            v2: vec![0.0; len],
            v3: vec![0.0; len],
            stage: template.clone(),
        }
    }

    /// Sets the stage state to `y + c (v, a)`.
    fn load_stage(&mut self, y: &ParticleState, c: f64, v: &[f64], a: &[f64]) {
        let (x0, v0) = (y.positions_soa(), y.velocities_soa());
        for ((s, x), dv) in self.stage.positions_soa_mut().iter_mut().zip(x0).zip(v) {
            *s = x + c * dv;
        }
        for ((s, u), da) in self.stage.velocities_soa_mut().iter_mut().zip(v0).zip(a) {
            *s = u + c * da;
        }
    }

    /// One classical RK4 step of size `h` from `y`, whose accelerations are
    /// `k1`, written into `out`.
    fn step(&mut self, model: &ModelSpec, y: &ParticleState, k1: &[f64], h: f64, out: &mut ParticleState) {
        let v1 = y.velocities_soa();

        self.load_stage(y, 0.5 * h, v1, k1);
        self.v2.copy_from_slice(self.stage.velocities_soa());
        accelerations_into(&self.stage, model, &mut self.rows, &mut self.a2);

        let (v2, a2) = (core::mem::take(&mut self.v2), core::mem::take(&mut self.a2));
        self.load_stage(y, 0.5 * h, &v2, &a2);
        self.v3.copy_from_slice(self.stage.velocities_soa());
        accelerations_into(&self.stage, model, &mut self.rows, &mut self.a3);

        let (v3, a3) = (core::mem::take(&mut self.v3), core::mem::take(&mut self.a3));
        self.load_stage(y, h, &v3, &a3);
        accelerations_into(&self.stage, model, &mut self.rows, &mut self.a4);
        let v4 = self.stage.velocities_soa();

        let w = h / 6.0;
        for (m, xo) in out.positions_soa_mut().iter_mut().enumerate() {
            *xo = y.positions_soa()[m] + w * (v1[m] + 2.0 * v2[m] + 2.0 * v3[m] + v4[m]);
        }
        for (m, vo) in out.velocities_soa_mut().iter_mut().enumerate() {
            *vo = v1[m] + w * (k1[m] + 2.0 * a2[m] + 2.0 * a3[m] + self.a4[m]);
        }
        out.time = y.time + h;
        (self.v2, self.a2, self.v3, self.a3) = (v2, a2, v3, a3);
    }
}

/// Reusable RK4 step-doubling integrator for one model.
pub struct Integrator<'a> {
    model: &'a ModelSpec,
    config: &'a IntegratorConfig,
    h: f64,
    ws: Rk4Workspace,
    k1: Vec<f64>,
    k_mid: Vec<f64>,
    full: ParticleState,
    mid: ParticleState,
    half: ParticleState,
}

impl<'a> Integrator<'a> {
    pub fn new(model: &'a ModelSpec, config: &'a IntegratorConfig, template: &ParticleState) -> Self {
        let len = template.len() * template.dim();
        Self {
            model,
            config,
            h: config.dt,
            ws: Rk4Workspace::new(template),
            k1: vec![0.0; len],
            k_mid: vec![0.0; len],
            full: template.clone(),
            mid: template.clone(),
            half: template.clone(),
        }
    }

    /// Current trial step size.
    pub fn step_size(&self) -> f64 {
        self.h
    }

    /// Advances `state` by one accepted step, never past `target`.
    pub fn step_towards(&mut self, state: &mut ParticleState, target: f64) -> Result<StepReport, IntegrationError> {
        let tol = self.config.error_tol;
        let h_min = self.config.dt * MIN_STEP_FRACTION;
        let mut rejected = 0;
        accelerations_into(state, self.model, &mut self.ws.rows, &mut self.k1);
        loop {
            let remaining = target - state.time;
            let clipped = self.h >= remaining;
            let h = if clipped { remaining } else { self.h };

            self.ws.step(self.model, state, &self.k1, h, &mut self.full);
            self.ws.step(self.model, state, &self.k1, 0.5 * h, &mut self.mid);
            accelerations_into(&self.mid, self.model, &mut self.ws.rows, &mut self.k_mid);
            self.ws.step(self.model, &self.mid, &self.k_mid, 0.5 * h, &mut self.half);

            let err = self.full.max_abs_diff(&self.half) / 15.0;
            if err <= tol {
                self.half.time = if clipped { target } else { state.time + h };
                core::mem::swap(state, &mut self.half);
                if !clipped {
                    let grow = if err == 0.0 { 2.0 } else { (0.9 * (tol / err).powf(0.2)).clamp(1.0, 2.0) };
                    self.h = (h * grow).min(self.config.dt);
                }
                return Ok(StepReport { step: h, error: err, rejected });
            }
            let shrink = if err.is_finite() { (0.9 * (tol / err).powf(0.2)).clamp(0.2, 0.9) } else { 0.2 };
            self.h = h * shrink;
            rejected += 1;
            if self.h < h_min {
                return Err(IntegrationError::StepUnderflow { time: state.time, step: self.h, error: err, partial: None });
            }
        }
    }
}

/// One accepted step starting from the base step `config.dt`, capped at
/// `config.t_end`.
pub fn step(state: &ParticleState, model: &ModelSpec, config: &IntegratorConfig) -> Result<ParticleState, IntegrationError> {
    config.validate()?;
    let mut s = state.clone();
    let target = if config.t_end > s.time { config.t_end } else { s.time + config.dt };
    let mut integ = Integrator::new(model, config, state);
    integ.step_towards(&mut s, target)?;
    Ok(s)
}

/// Integrates from `state.time` to `config.t_end`, recording the initial
/// state, every `observer_stride`-th accepted step, every checkpoint and the
/// final state.
pub fn integrate(state: &ParticleState, model: &ModelSpec, config: &IntegratorConfig) -> Result<Trajectory, IntegrationError> {
    config.validate()?;
    state.validate()?;
    let mut targets: Vec<f64> = config
        .checkpoints
        .iter()
        .copied()
        .filter(|&t| t > state.time && t < config.t_end)
        .collect();
    targets.sort_by(|a, b| a.total_cmp(b));
    targets.dedup();
    if config.t_end > state.time {
        targets.push(config.t_end);
    }

    let mut traj = Trajectory::default();
    let mut s = state.clone();
    traj.push(&s);
    let mut integ = Integrator::new(model, config, state);
    let mut steps = 0usize;
    let mut since = 0usize;
    for &target in &targets {
        while s.time < target {
            if steps >= config.max_steps {
                traj.push(&s);
                return Err(IntegrationError::MaxSteps { steps, time: s.time, partial: Box::new(traj) });
            }
            match integ.step_towards(&mut s, target) {
                Ok(_) => {}
                Err(IntegrationError::StepUnderflow { time, step, error, .. }) => {
                    traj.push(&s);
                    return Err(IntegrationError::StepUnderflow { time, step, error, partial: Some(Box::new(traj)) });
                }
                Err(e) => return Err(e),
            }
            steps += 1;
            since += 1;
            if since == config.observer_stride || s.time == target {
                traj.push(&s);
                since = 0;
            }
        }
    }
    Ok(traj)
}
