//! Shared domain types: pulses, line shapes, grids, field envelopes and
//! ensemble amplitudes.

pub mod ensemble;
pub mod field;
pub mod grid;
pub mod line;
pub mod pulse;
pub mod schedule;

pub use ensemble::{EnsembleState, ModeSet};
pub use field::{FieldEnvelope, TimeSeries};
pub use grid::{SimGrid, TimeGrid};
pub use line::{line_weight, LineKind, LineShape};
pub use pulse::{pulse_envelope, Direction, PulseKind, PulseSpec};
pub use schedule::Schedule;
