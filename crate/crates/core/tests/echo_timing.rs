//! Echo arrival time and rephasing with ideal flips.
//!
//! A flat line truncated at ±W is dispersive: near resonance the weak field
//! obeys ∂Ω/∂ζ = −Ω/2 − iωΩ/(πW), which advances a pulse by ζ/(πW). The
//! echo inherits that advance along its path through the medium.

mod common;

use common::{small, with_ideal_flips};
use echomem::atom::{free_propagator, total_propagator};
use echomem::metrics::EchoReport;
use echomem::protocol::{control_map, run_protocol_with, Variant};

fn delay_offset(variant: Variant, zeta_l: f64, ideal: bool) -> (f64, f64) {
    let c = small(variant, zeta_l);
    let nominal = c.schedule.t3 - c.schedule.t0;
    let mut map = control_map(&c).unwrap();
    if ideal {
        map = with_ideal_flips(&map, &c.grid);
    }
    let out = run_protocol_with(&c, &map).unwrap();
    let r = EchoReport::evaluate(&out.signal, &out.echo, nominal, 5.0 * c.signal.tau).unwrap();
    (r.best_delay - nominal, c.grid.dt)
}

/// Advance of the echo for a line of half-width `w`.
fn dispersion_advance(variant: Variant, zeta_l: f64, w: f64) -> f64 {
    let path = match variant {
        // every contribution crosses the whole medium once
        Variant::ForwardEcho => zeta_l,
        // in and back out from depth ζ', amplitude weight e^{-ζ'}
        Variant::BackwardEcho => 2.0 * (1.0 - zeta_l * (-zeta_l).exp() / (1.0 - (-zeta_l).exp())),
    };
    path / (std::f64::consts::PI * w)
}

#[test]
fn thin_medium_echo_arrives_at_t3() {
    for variant in [Variant::ForwardEcho, Variant::BackwardEcho] {
        for ideal in [true, false] {
            let (off, dt) = delay_offset(variant, 0.1, ideal);
            assert!(off.abs() <= 2.0 * dt, "{variant:?} ideal={ideal}: offset {off}, dt {dt}");
        }
    }
}

#[test]
fn ideal_flip_echo_advance_matches_line_dispersion() {
    for variant in [Variant::ForwardEcho, Variant::BackwardEcho] {
        let (off, dt) = delay_offset(variant, 1.0, true);
        let expect = -dispersion_advance(variant, 1.0, 24.0);
        assert!((off - expect).abs() <= 2.0 * dt, "{variant:?}: offset {off}, predicted {expect}, dt {dt}");
    }
}

#[test]
fn ideal_flips_cancel_the_dephasing_phase() {
    let c = small(Variant::ForwardEcho, 0.0);
    let map = with_ideal_flips(&control_map(&c).unwrap(), &c.grid);
    let phases: Vec<f64> = c
        .grid
        .delta
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            // t₀ → t₃: add the signal and echo half-windows
            let half = free_propagator(d, c.schedule.signal_half);
            let u = half
                .mul(&total_propagator(&map.first.propagators[i], &map.second.propagators[i], d, &c.schedule).unwrap())
                .mul(&half);
            (u.m[0][0].conj() * u.m[1][1]).arg()
        })
        .collect();
    let spread = phases.iter().fold(0.0f64, |m, p| m.max((p - phases[0]).abs()));
    assert!(spread < 1e-9, "{spread}");
}

#[test]
fn ideal_flips_reach_the_same_efficiency() {
    // thin medium: the chirped pair already acts as a perfect flip pair
    for variant in [Variant::ForwardEcho, Variant::BackwardEcho] {
        let c = small(variant, 0.5);
        let nominal = c.schedule.t3 - c.schedule.t0;
        let map = control_map(&c).unwrap();
        let real = run_protocol_with(&c, &map).unwrap();
        let ideal = run_protocol_with(&c, &with_ideal_flips(&map, &c.grid)).unwrap();
        let e = |o: &echomem::protocol::ProtocolOutcome| EchoReport::evaluate(&o.signal, &o.echo, nominal, 2.5).unwrap().eta;
        assert!((e(&real) - e(&ideal)).abs() < 1e-3, "{variant:?}: {} vs {}", e(&real), e(&ideal));
    }
}
