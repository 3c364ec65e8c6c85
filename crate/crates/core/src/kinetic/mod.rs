//! Measures on phase space, their moments, the mean-field field and its
//! characteristics.

mod characteristic;
mod field;
mod measure;
mod sampling;

pub use characteristic::{
    flow_characteristic, flow_characteristic_between, CharacteristicError, Interpolation, MeasureFlow, PathPoint,
};
pub use field::{field_h, FieldEvaluator};
pub use measure::{
    moments, moments_of_state, moments_with, support_radius, support_radius_with, EmpiricalMeasure, MeasureError,
    MomentSet, PhaseNorm, MASS_TOLERANCE,
};
pub use sampling::{sample_initial, InitialLaw, InitialSpec};
