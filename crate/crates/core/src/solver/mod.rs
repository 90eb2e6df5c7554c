//! Field–ensemble propagation in the retarded frame, marching in optical depth.

pub mod control;
pub mod export;
pub mod weak;

pub use control::{propagate_control, propagate_control_pair, ControlPairMap, ControlPassage, PropagationProblem};
pub use export::{write_field_binary, write_field_csv};
pub use weak::{absorb_signal_weak, emit_echo, weak_march, Absorption, WeakPassage};
