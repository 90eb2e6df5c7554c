//! The two memory variants end to end: signal storage, optional shelving,
//! two control passages, free segments and echo emission.
//!
//! Mode bookkeeping follows the Fourier index of each amplitude. A forward
//! field couples `(α_n, β_{n+1})`, a backward one `(α_n, β_{n−1})`. The
//! signal leaves its coherence in `β₁`; after the whole sequence the
//! retrievable coherence sits at order `+1` (forward echo) or `−1`
//! (backward echo), while the primary echo after the first control carries
//! an order that no field mode can radiate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::atom::Propagator2;
use crate::error::{Error, Result};
use crate::model::{Direction, EnsembleState, LineKind, LineShape, PulseKind, PulseSpec, Schedule, SimGrid, TimeGrid, TimeSeries};
use crate::solver::{absorb_signal_weak, emit_echo, propagate_control_pair, ControlPairMap};

/// Largest accepted phase-matched polarization at the primary-echo instant,
/// relative to the signal-era peak.
pub const SILENCING_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Backward controls, echo leaves forward.
    ForwardEcho,
    /// Forward controls plus a shelving round trip, echo leaves backward.
    BackwardEcho,
}

impl Variant {
    pub fn control_direction(self) -> Direction {
        match self {
            Variant::ForwardEcho => Direction::Backward,
            Variant::BackwardEcho => Direction::Forward,
        }
    }

    pub fn echo_direction(self) -> Direction {
        match self {
            Variant::ForwardEcho => Direction::Forward,
            Variant::BackwardEcho => Direction::Backward,
        }
    }

    /// Order carried by the signal coherence between the two controls.
    pub fn silenced_order(self) -> i32 {
        match self {
            Variant::ForwardEcho => -3,
            Variant::BackwardEcho => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shelving {
    /// `β₁ → γ₀ → β₋₁` through the auxiliary state, as an index relabelling.
    IdealSwap,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub variant: Variant,
    pub signal: PulseSpec,
    /// Template for both controls; centre times come from the schedule.
    pub control: PulseSpec,
    pub schedule: Schedule,
    pub line: LineShape,
    pub grid: SimGrid,
    pub shelving: Shelving,
    /// Fraction of the `β₁` amplitude moved by the shelving swap.
    pub transfer_efficiency: f64,
}

impl ProtocolConfig {
    /// Defaults for `variant`: shelving on for the backward echo, ideal transfer.
    pub fn new(variant: Variant, signal: PulseSpec, control: PulseSpec, schedule: Schedule, line: LineShape, grid: SimGrid) -> Self {
        let shelving = match variant {
            Variant::ForwardEcho => Shelving::None,
            Variant::BackwardEcho => Shelving::IdealSwap,
        };
        ProtocolConfig {
            variant,
            signal: signal.centered_at(schedule.t0).travelling(Direction::Forward),
            control: control.travelling(variant.control_direction()),
            schedule,
            line,
            grid,
            shelving,
            transfer_efficiency: 1.0,
        }
    }

    pub fn first_control(&self) -> PulseSpec {
        self.control.clone().centered_at(self.schedule.t1)
    }

    pub fn second_control(&self) -> PulseSpec {
        self.control.clone().centered_at(self.schedule.t2)
    }

    /// Echo window `[t₃ − T, t₃ + T]`.
    pub fn echo_window(&self) -> (f64, f64) {
        let s = &self.schedule;
        (s.t3 - s.signal_half, s.t3 + s.signal_half)
    }

    pub fn validate(&self) -> Result<()> {
        self.signal.validate()?;
        self.control.validate()?;
        self.line.validate()?;
        self.grid.validate()?;
        let s = &self.schedule;
        s.validate(self.grid.dt)?;
        if self.signal.kind != PulseKind::GaussianSignal {
            return Err(Error::Config("the signal must be a gaussian_signal pulse".into()));
        }
        if self.control.kind == PulseKind::GaussianSignal {
            return Err(Error::Config("controls must be sech_chirp or pi_sech pulses".into()));
        }
        if self.signal.direction != Direction::Forward {
            return Err(Error::Config("the signal must travel forward".into()));
        }
        if self.control.direction != self.variant.control_direction() {
            return Err(Error::Config(format!(
                "{:?} needs {:?} controls",
                self.variant,
                self.variant.control_direction()
            )));
        }
        if (self.signal.t_center - s.t0).abs() > 1e-12 * (1.0 + s.t0.abs()) {
            return Err(Error::Schedule(format!(
                "signal centred at {} but schedule has t0 = {}",
                self.signal.t_center, s.t0
            )));
        }
        if (self.signal.window_halfwidth - s.signal_half).abs() > 1e-12
            || (self.control.window_halfwidth - s.control_half).abs() > 1e-12
        {
            return Err(Error::Schedule(
                "schedule window half-widths differ from the pulse windows".into(),
            ));
        }
        match (self.variant, self.shelving) {
            (Variant::ForwardEcho, Shelving::IdealSwap) => {
                return Err(Error::Config("shelving applies to the backward_echo variant only".into()))
            }
            (Variant::BackwardEcho, Shelving::None) => {
                // Allowed, but the primary echo is then phase matched and the
                // silencing check fails.
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.transfer_efficiency) {
            return Err(Error::Config(format!(
                "transfer_efficiency {} not in [0, 1]",
                self.transfer_efficiency
            )));
        }
        self.check_recurrence()
    }

    /// A uniform Δ grid makes every dephased coherence revive after
    /// `2π/dΔ`; that time must exceed the span from the signal window to
    /// the end of the echo window.
    fn check_recurrence(&self) -> Result<()> {
        if self.line.kind != LineKind::Flat || self.grid.n_delta() < 2 {
            return Ok(());
        }
        let step = self.grid.delta[1] - self.grid.delta[0];
        let s = &self.schedule;
        let span = (s.t3 + s.signal_half) - (s.t0 - s.signal_half);
        let revival = 2.0 * PI / step;
        if revival <= span {
            return Err(Error::Config(format!(
                "Δ spacing {step} revives dephased coherence after {revival:.3} µs, inside the {span} µs protocol span; use dΔ < {:.5}",
                2.0 * PI / span
            )));
        }
        Ok(())
    }
}

/// `|𝓟_k|` (largest over ζ) sampled around the primary-echo instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderTrace {
    pub order: i32,
    pub time: Vec<f64>,
    pub magnitude: Vec<f64>,
}

impl OrderTrace {
    pub fn peak(&self) -> f64 {
        self.magnitude.iter().copied().fold(0.0, f64::max)
    }
}

/// Polarization of every reachable order over `times`; `state` is advanced
/// on a copy, so it must be valid at or before the first requested time.
pub fn primary_echo_monitor(state: &EnsembleState, times: &[f64], grid: &SimGrid, line: &LineShape) -> Result<Vec<OrderTrace>> {
    let orders = state.probe_orders();
    let mut traces: Vec<OrderTrace> = orders
        .iter()
        .map(|&order| OrderTrace {
            order,
            time: Vec::with_capacity(times.len()),
            magnitude: Vec::with_capacity(times.len()),
        })
        .collect();
    let mut probe = state.clone();
    for &t in times {
        probe.free_evolve(grid, t - probe.epoch)?;
        for tr in &mut traces {
            let p = probe.probe_polarization(tr.order, grid, line)?;
            tr.time.push(t);
            tr.magnitude.push(p.iter().fold(0.0, |m, z| m.max(z.norm())));
        }
    }
    Ok(traces)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilencingCheck {
    /// Largest `|𝓟₊₁|, |𝓟₋₁|` near `2t₁ − t₀` over the signal-era peak.
    pub relative_phase_matched: f64,
    /// Order with the largest polarization near `2t₁ − t₀`.
    pub dominant_order: Option<i32>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub absorbed_fraction: f64,
    pub signal_peak_polarization: f64,
    pub monitor: Vec<OrderTrace>,
    pub silencing: SilencingCheck,
    /// Mode pairs tracked when the echo is emitted.
    pub tracked_pairs: usize,
    pub max_norm: f64,
}

#[derive(Debug, Clone)]
pub struct ProtocolOutcome {
    /// Incident signal at the entry face.
    pub signal: TimeSeries,
    pub transmitted: TimeSeries,
    /// Echo leaving the medium in the variant's direction.
    pub echo: TimeSeries,
    pub diagnostics: Diagnostics,
}

/// Both control passages for `config`, over its whole ζ grid.
pub fn control_map(config: &ProtocolConfig) -> Result<ControlPairMap> {
    config.validate()?;
    propagate_control_pair(&config.line, &config.grid, &config.first_control(), &config.second_control())
}

pub fn run_protocol(config: &ProtocolConfig) -> Result<ProtocolOutcome> {
    let map = control_map(config)?;
    run_protocol_with(config, &map)
}

/// Same as [`run_protocol`] with control passages computed beforehand on a
/// medium at least as deep, with the same line, Δ nodes, ζ step and controls.
pub fn run_protocol_with(config: &ProtocolConfig, map: &ControlPairMap) -> Result<ProtocolOutcome> {
    config.validate()?;
    let grid = &config.grid;
    let line = &config.line;
    let s = config.schedule;
    let variant = config.variant;
    check_map(config, map)?;
    let (c1, c2) = map.propagators_for(grid.n_zeta())?;

    let stored = absorb_signal_weak(&config.signal, line, grid)?;
    let mut state = stored.state;
    if config.shelving == Shelving::IdealSwap {
        state.shelve(1, -1, config.transfer_efficiency)?;
    }
    let (a1, b1) = config.first_control().window();
    state.free_evolve(grid, a1 - state.epoch)?;
    apply(&mut state, variant, &c1, b1 - a1)?;

    let t_primary = s.primary_echo_time();
    let reach = 2.0 * config.signal.tau;
    let (a2, b2) = config.second_control().window();
    let lo = (t_primary - reach).max(state.epoch);
    let hi = (t_primary + reach).min(a2);
    let times: Vec<f64> = (0..=8).map(|k| lo + (hi - lo) * k as f64 / 8.0).collect();
    let monitor = primary_echo_monitor(&state, &times, grid, line)?;
    let silencing = silencing_check(&monitor, stored.peak_polarization);
    if !silencing.passed && config.transfer_efficiency == 1.0 {
        return Err(Error::Numerical(format!(
            "primary echo not silenced: phase-matched polarization at {:.3e} of the signal peak",
            silencing.relative_phase_matched
        )));
    }

    state.free_evolve(grid, a2 - state.epoch)?;
    apply(&mut state, variant, &c2, b2 - a2)?;
    let (ea, eb) = config.echo_window();
    state.free_evolve(grid, ea - state.epoch)?;
    state.check_norm()?;
    let tracked_pairs = state.tracked_pairs(variant.echo_direction()).len();
    let max_norm = state.max_norm();
    let window = TimeGrid::covering(ea, eb, grid.dt);
    let field = emit_echo(&mut state, variant.echo_direction(), window, grid, line)?;

    Ok(ProtocolOutcome {
        signal: stored.field.entry(),
        transmitted: stored.transmitted,
        echo: field.exit(),
        diagnostics: Diagnostics {
            absorbed_fraction: stored.absorbed_fraction,
            signal_peak_polarization: stored.peak_polarization,
            monitor,
            silencing,
            tracked_pairs,
            max_norm,
        },
    })
}

fn apply(state: &mut EnsembleState, variant: Variant, u: &[Propagator2], duration: f64) -> Result<()> {
    state.apply_control(variant.control_direction(), u, duration)
}

fn check_map(config: &ProtocolConfig, map: &ControlPairMap) -> Result<()> {
    let grid = &config.grid;
    if map.direction != config.variant.control_direction() {
        return Err(Error::Config("control map was computed for the other direction".into()));
    }
    if map.n_delta != grid.n_delta() {
        return Err(Error::Config(format!(
            "control map has {} Δ nodes, grid has {}",
            map.n_delta,
            grid.n_delta()
        )));
    }
    let n = grid.n_zeta();
    if n > map.depth.len() || map.depth[..n].iter().zip(&grid.zeta).any(|(a, b)| (a - b).abs() > 1e-9) {
        return Err(Error::Config("control map ζ nodes do not cover the medium".into()));
    }
    let (_, b1) = config.first_control().window();
    let (a2, _) = config.second_control().window();
    if (map.gap - (a2 - b1)).abs() > 1e-9 {
        return Err(Error::Schedule(format!(
            "control map gap {} differs from the schedule gap {}",
            map.gap,
            a2 - b1
        )));
    }
    let duration = |p: &PulseSpec| {
        let (a, b) = p.window();
        b - a
    };
    if (map.first.duration() - duration(&config.control)).abs() > 1e-9 {
        return Err(Error::Config("control map window differs from the control template".into()));
    }
    Ok(())
}

pub fn silencing_check(monitor: &[OrderTrace], signal_peak: f64) -> SilencingCheck {
    let matched = monitor
        .iter()
        .filter(|t| t.order.abs() == 1)
        .map(OrderTrace::peak)
        .fold(0.0, f64::max);
    let dominant = monitor
        .iter()
        .map(|t| (t.order, t.peak()))
        .filter(|(_, p)| *p > 0.0)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(o, _)| o);
    let relative = if signal_peak > 0.0 { matched / signal_peak } else { 0.0 };
    SilencingCheck {
        relative_phase_matched: relative,
        dominant_order: dominant,
        passed: relative < SILENCING_LIMIT,
    }
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64 as C64;

    use super::*;
    use crate::model::LineShape;

    fn peak(x: &TimeSeries) -> f64 {
        x.samples.iter().fold(0.0, |m: f64, z: &C64| m.max(z.norm()))
    }

    /// Short, coarse setup: τ_c = 0.5, sweep ±10 rad/µs, ζ_L = 1.
    fn small(variant: Variant, zeta_len: f64) -> ProtocolConfig {
        let line = LineShape::flat(24.0);
        let control = PulseSpec::sech_chirp(10.0, 0.5, -5.0);
        let signal = PulseSpec::gaussian_signal(1e-3, 0.5, 0.0);
        let schedule = Schedule::packed(0.0, signal.window_halfwidth, control.window_halfwidth, 0.5);
        let grid = SimGrid::with_delta_step(&line, 0.1, zeta_len, 0.1, 0.1 / 45.0).unwrap();
        ProtocolConfig::new(variant, signal, control, schedule, line, grid)
    }

    #[test]
    fn variant_geometry() {
        assert_eq!(Variant::ForwardEcho.control_direction(), Direction::Backward);
        assert_eq!(Variant::BackwardEcho.echo_direction(), Direction::Backward);
        let c = small(Variant::BackwardEcho, 0.5);
        assert_eq!(c.shelving, Shelving::IdealSwap);
        c.validate().unwrap();
    }

    #[test]
    fn inconsistent_configs_are_rejected() {
        let mut c = small(Variant::ForwardEcho, 0.5);
        c.control.direction = Direction::Forward;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = small(Variant::ForwardEcho, 0.5);
        c.shelving = Shelving::IdealSwap;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = small(Variant::ForwardEcho, 0.5);
        c.schedule.t3 += 0.3;
        assert!(matches!(c.validate(), Err(Error::Schedule(_))));
    }

    #[test]
    fn coarse_delta_grid_is_rejected() {
        let mut c = small(Variant::ForwardEcho, 0.5);
        c.grid = SimGrid::with_delta_step(&c.line, 0.5, 0.5, 0.1, c.grid.dt).unwrap();
        let err = c.validate().unwrap_err();
        assert!(err.to_string().contains("revives"), "{err}");
    }

    #[test]
    fn only_order_one_before_controls() {
        let c = small(Variant::ForwardEcho, 0.5);
        let stored = absorb_signal_weak(&c.signal, &c.line, &c.grid).unwrap();
        assert_eq!(stored.state.probe_orders(), vec![1]);
    }

    #[test]
    fn zero_signal_gives_zero_echo() {
        let mut c = small(Variant::ForwardEcho, 0.5);
        c.signal.omega0 = 0.0;
        // A zero signal is rejected as a domain error before anything runs.
        assert!(matches!(run_protocol(&c), Err(Error::Domain(_))));
    }

    #[test]
    fn echo_scales_linearly_with_signal() {
        let c = small(Variant::ForwardEcho, 0.5);
        let map = control_map(&c).unwrap();
        let a = run_protocol_with(&c, &map).unwrap();
        let mut c2 = c.clone();
        c2.signal.omega0 *= 3.0;
        let b = run_protocol_with(&c2, &map).unwrap();
        for (x, y) in a.echo.samples.iter().zip(&b.echo.samples) {
            assert!((x * 3.0 - y).norm() <= 1e-12 * peak(&b.echo));
        }
    }

    #[test]
    fn silenced_orders_dominate_after_first_control() {
        for variant in [Variant::ForwardEcho, Variant::BackwardEcho] {
            let c = small(variant, 0.5);
            let out = run_protocol(&c).unwrap();
            let s = &out.diagnostics.silencing;
            assert!(s.passed, "{variant:?}: {}", s.relative_phase_matched);
            assert_eq!(s.dominant_order, Some(variant.silenced_order()));
        }
    }

    #[test]
    fn unshelved_backward_variant_is_not_silenced() {
        let mut c = small(Variant::BackwardEcho, 0.5);
        c.shelving = Shelving::None;
        assert!(matches!(run_protocol(&c), Err(Error::Numerical(_))));
    }

    #[test]
    fn partial_transfer_is_reported_not_fatal() {
        let mut c = small(Variant::BackwardEcho, 0.5);
        c.transfer_efficiency = 0.9;
        let out = run_protocol(&c).unwrap();
        assert!(!out.diagnostics.silencing.passed);
    }

    #[test]
    fn map_for_other_direction_is_rejected() {
        let f = small(Variant::ForwardEcho, 0.5);
        let b = small(Variant::BackwardEcho, 0.5);
        let map = control_map(&b).unwrap();
        assert!(matches!(run_protocol_with(&f, &map), Err(Error::Config(_))));
    }
}
