//! Single-atom propagators: numeric and adiabatic control-pulse matrices,
//! free evolution, composition and the derived rephasing quantities.

pub mod adiabatic;
pub mod integrator;
pub mod propagator;
pub mod rephasing;

pub use adiabatic::{adiabatic_propagator, AdiabaticDecomposition, Modulation};
pub use integrator::{control_propagator, evolve_pair, StepTable};
pub use propagator::{excitation_envelope, free_propagator, rephasing_factor, remanent_excitation, total_propagator, Propagator2};
pub use rephasing::{excitation_map, propagator_grid, rephasing_product_map, RephasingMap, AP_LEVEL};
