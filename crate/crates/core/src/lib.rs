//! Simulation and verification toolkit for the collision-avoiding flocking
//! particle system and its mean-field kinetic equation.
//!
//! The crate is `no_std` (with `alloc`). Enable `std` for std-backed float
//! math and `parallel` to split the O(N²) force kernel across a rayon pool;
//! results are bitwise identical either way.
//!
//! Modules:
//! - [`model`]: interaction rate, coupling and repulsion presets and the
//!   assumption checker.
//! - [`dynamics`]: particle state, the pairwise force kernel, the RK4
//!   step-doubling integrator and trajectories.
//! - [`kinetic`]: empirical measures, moments, the mean-field field and the
//!   characteristic flow.
//! - [`transport`]: exact Wasserstein-1 and bounded-Lipschitz distances
//!   between discrete measures.
//! - [`diagnostics`]: decay envelopes, verdicts and the stability,
//!   mean-field and flocking studies.
#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod diagnostics;
pub mod dynamics;
pub mod kinetic;
pub mod math;
pub mod model;
pub mod transport;

pub use dynamics::{IntegratorConfig, ParticleState, Snapshot, Trajectory};
pub use kinetic::{EmpiricalMeasure, InitialSpec, MomentSet};
pub use model::ModelSpec;
pub use transport::{DiscreteMeasure, GroundMetric, TransportPlan};

