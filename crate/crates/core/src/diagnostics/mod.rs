//! Verdicts on trajectories and the stability, mean-field and flocking
//! studies.

mod probe;
mod studies;
mod verdict;

use thiserror::Error;

use crate::dynamics::{IntegrationError, StateError};
use crate::transport::TransportError;

pub use probe::{lipschitz_probe, lipschitz_profile};
pub use studies::{
    flocking_study, meanfield_study, perturb_velocities, stability_study, ConvergenceRow, ConvergenceTable,
    FlockingPoint, Pairing, StabilityPoint, StabilityReport,
};
pub use verdict::{
    envelope_value, fit_support_envelope, fit_support_series, gamma_plateau, max_rise, observed_phi_star,
    support_envelope, verify_conservation, verify_decay, verify_gamma_bound, verify_gamma_bound_with,
    DecayEnvelope, SeriesPoint, VerdictReport,
};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("trajectory or series is empty")]
    EmptyTrajectory,
    #[error("series spans {span}, needs at least {needed}")]
    TooShort { span: f64, needed: f64 },
    #[error("no snapshot recorded at t = {0}")]
    MissingTime(f64),
    #[error("{0}")]
    Parameter(alloc::string::String),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}
