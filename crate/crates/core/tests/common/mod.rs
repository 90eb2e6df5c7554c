#![allow(dead_code)]

use echomem::atom::{free_propagator, Propagator2};
use echomem::model::{LineShape, PulseSpec, Schedule, SimGrid};
use echomem::protocol::{ProtocolConfig, Variant};
use echomem::solver::ControlPairMap;
use num_complex::Complex64 as C64;

/// Flat line ±24, τ = 0.5 controls sweeping ±10 rad/µs, τ = 0.5 signal.
pub fn small(variant: Variant, zeta_len: f64) -> ProtocolConfig {
    let line = LineShape::flat(24.0);
    let control = PulseSpec::sech_chirp(10.0, 0.5, -5.0);
    let signal = PulseSpec::gaussian_signal(1e-3, 0.5, 0.0);
    let schedule = Schedule::packed(0.0, signal.window_halfwidth, control.window_halfwidth, 0.5);
    let grid = SimGrid::with_delta_step(&line, 0.1, zeta_len, 0.1, 0.1 / 45.0).unwrap();
    ProtocolConfig::new(variant, signal, control, schedule, line, grid)
}

/// Instantaneous flip at the window centre: `F(D/2) X F(D/2)`.
pub fn ideal_window(delta: f64, duration: f64) -> Propagator2 {
    let z = C64::new(0.0, 0.0);
    let x = Propagator2::new([[z, C64::new(-1.0, 0.0)], [C64::new(1.0, 0.0), z]]);
    let f = free_propagator(delta, duration / 2.0);
    f.mul(&x).mul(&f)
}

/// `map` with both passages replaced by ideal flips on every atom.
pub fn with_ideal_flips(map: &ControlPairMap, grid: &SimGrid) -> ControlPairMap {
    let mut out = map.clone();
    let n_zeta = map.depth.len();
    let fill = |d: f64| -> Vec<Propagator2> {
        (0..n_zeta)
            .flat_map(|_| grid.delta.iter().map(move |&x| ideal_window(x, d)))
            .collect()
    };
    out.first.propagators = fill(map.first.duration());
    out.second.propagators = fill(map.second.duration());
    out
}
