//! The N-particle system: state, pairwise forces and time integration.

mod force;
mod integrator;
mod state;

pub use force::{accelerations, accelerations_into, alignment_measure, pair_term, velocity_spread};
pub(crate) use force::repulsion_weight;
pub use integrator::{
    integrate, step, IntegrationError, Integrator, IntegratorConfig, Snapshot, StepReport, Trajectory,
    MIN_STEP_FRACTION,
};
pub use state::{ParticleState, StateError};
