//! One-dimensional shallow water flow in a prismatic channel, solved with a
//! MacCormack predictor-corrector scheme, together with the Dressler dam-break
//! solution, a priori stability conditions and convergence tooling.

pub mod cli;
pub mod dressler;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod plot;
pub mod scheme;
pub mod stability;

pub use error::{Error, Result};
pub use model::{ChannelGeometry, FlowState, GridSpec, InitialCondition, RainfallSpec, Scenario};
pub use scheme::{BoundaryMode, Stepper};
