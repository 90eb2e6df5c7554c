//! Photon-echo quantum memory driven by chirped adiabatic-passage control
//! pulses in an inhomogeneously broadened, optically thick ensemble.

pub mod atom;
pub mod contour;
pub mod error;
pub mod format;
pub mod metrics;
pub mod model;
pub mod protocol;
pub mod scan;
pub mod solver;

pub use error::{Error, Result};
