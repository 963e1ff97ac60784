//! Joint state and parameter estimation for a one-way coupled
//! electromechanical cardiac fiber.
//!
//! The electrical compartment (Mitchell-Schaeffer on a bidomain cable) is
//! filtered by a reduced-order UKF over POD coordinates and parameters; the
//! mechanical compartment is corrected by a Luenberger observer inside each
//! particle.

pub mod electro;
pub mod error;
pub mod filters;
pub mod coupled;
pub mod linalg;
pub mod mech;
pub mod pod;
pub mod statespace;
pub mod twin;

pub use error::{Error, Result};
pub use filters::{
    FilterState, LowRankCovariance, ObservationRecord, ParamSet, SigmaPointSet, StepReport,
};
pub use statespace::{
    AugmentedState, Layout, ObservationOperator, StateVector, TimeGrid, TransitionOperator,
};
