use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Propagation direction of a field along the medium axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    /// Spatial Fourier index shift imprinted by this field: a forward field
    /// couples `α_n` to `β_{n+1}`, a backward one couples `α_n` to `β_{n-1}`.
    pub fn index_shift(self) -> i32 {
        match self {
            Direction::Forward => 1,
            Direction::Backward => -1,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    /// `Ω₀ sech(x)^{1+iμ}`, frequency swept from `μ/τ` to `-μ/τ`.
    SechChirp,
    /// Unchirped sech pulse of area π.
    PiSech,
    /// Weak Gaussian signal `exp(-x²/2)` with a carrier offset.
    GaussianSignal,
}

/// Parametric pulse definition. Times in µs, frequencies in rad/µs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub kind: PulseKind,
    pub omega0: f64,
    pub tau: f64,
    pub mu: f64,
    pub t_center: f64,
    pub direction: Direction,
    pub carrier_offset: f64,
    pub window_halfwidth: f64,
}

/// Smallest accepted window half-width, in units of `tau`.
pub const MIN_WINDOW_TAUS: f64 = 5.0;
/// Default half-width for sech-shaped pulses: `sech(10) < 10⁻⁴`.
pub const SECH_WINDOW_TAUS: f64 = 10.0;
/// Default half-width for Gaussian signals: `exp(-12.5) < 10⁻⁵`.
pub const GAUSSIAN_WINDOW_TAUS: f64 = 5.0;

impl PulseSpec {
    pub fn sech_chirp(omega0: f64, tau: f64, mu: f64) -> Self {
        PulseSpec {
            kind: PulseKind::SechChirp,
            omega0,
            tau,
            mu,
            t_center: 0.0,
            direction: Direction::Forward,
            carrier_offset: 0.0,
            window_halfwidth: SECH_WINDOW_TAUS * tau,
        }
    }

    /// Sech π-pulse of duration constant `tau` (peak Rabi frequency `1/tau`).
    pub fn pi_sech(tau: f64) -> Self {
        PulseSpec {
            kind: PulseKind::PiSech,
            omega0: 1.0 / tau,
            tau,
            mu: 0.0,
            t_center: 0.0,
            direction: Direction::Forward,
            carrier_offset: 0.0,
            window_halfwidth: SECH_WINDOW_TAUS * tau,
        }
    }

    pub fn gaussian_signal(amplitude: f64, tau: f64, carrier_offset: f64) -> Self {
        PulseSpec {
            kind: PulseKind::GaussianSignal,
            omega0: amplitude,
            tau,
            mu: 0.0,
            t_center: 0.0,
            direction: Direction::Forward,
            carrier_offset,
            window_halfwidth: GAUSSIAN_WINDOW_TAUS * tau,
        }
    }

    pub fn centered_at(mut self, t_center: f64) -> Self {
        self.t_center = t_center;
        self
    }

    pub fn travelling(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_window(mut self, halfwidth: f64) -> Self {
        self.window_halfwidth = halfwidth;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::Config(format!("pulse tau must be > 0, got {}", self.tau)));
        }
        if !self.omega0.is_finite() || self.omega0 < 0.0 {
            return Err(Error::Config(format!(
                "pulse omega0 must be finite and >= 0, got {}",
                self.omega0
            )));
        }
        if self.window_halfwidth < MIN_WINDOW_TAUS * self.tau * (1.0 - 1e-12) {
            return Err(Error::Config(format!(
                "pulse window half-width {} is below {}·tau = {}",
                self.window_halfwidth,
                MIN_WINDOW_TAUS,
                MIN_WINDOW_TAUS * self.tau
            )));
        }
        match self.kind {
            PulseKind::PiSech => {
                if self.mu != 0.0 {
                    return Err(Error::Config("pi_sech pulses must be unchirped (mu = 0)".into()));
                }
                if (self.area() - PI).abs() > 1e-12 {
                    return Err(Error::Config(format!(
                        "pi_sech pulse area is {} instead of π (omega0·tau must equal 1)",
                        self.area()
                    )));
                }
            }
            PulseKind::SechChirp => {}
            PulseKind::GaussianSignal => {
                if self.mu != 0.0 {
                    return Err(Error::Config("gaussian signals carry no chirp".into()));
                }
            }
        }
        if self.kind != PulseKind::GaussianSignal && self.carrier_offset != 0.0 {
            return Err(Error::Config(
                "carrier offsets are only supported for signal pulses".into(),
            ));
        }
        Ok(())
    }

    /// `[t_center - W, t_center + W]`.
    pub fn window(&self) -> (f64, f64) {
        (
            self.t_center - self.window_halfwidth,
            self.t_center + self.window_halfwidth,
        )
    }

    /// Pulse area `∫|Ω| dt` over the whole real line.
    pub fn area(&self) -> f64 {
        match self.kind {
            PulseKind::SechChirp | PulseKind::PiSech => PI * self.omega0 * self.tau,
            PulseKind::GaussianSignal => self.omega0 * self.tau * (2.0 * PI).sqrt(),
        }
    }

    /// Real envelope `|Ω(t)|`.
    pub fn amplitude(&self, t: f64) -> f64 {
        let x = (t - self.t_center) / self.tau;
        match self.kind {
            PulseKind::SechChirp | PulseKind::PiSech => self.omega0 * sech(x),
            PulseKind::GaussianSignal => self.omega0 * (-0.5 * x * x).exp(),
        }
    }

    /// Complex phase `φ(t)` with `Ω = |Ω| e^{iφ}`.
    pub fn phase(&self, t: f64) -> f64 {
        let dt = t - self.t_center;
        match self.kind {
            PulseKind::SechChirp | PulseKind::PiSech => -self.mu * ln_cosh(dt / self.tau),
            PulseKind::GaussianSignal => -self.carrier_offset * dt,
        }
    }

    /// `dφ/dt`; for the chirped sech this is `-(μ/τ) tanh(x)`.
    pub fn phase_rate(&self, t: f64) -> f64 {
        match self.kind {
            PulseKind::SechChirp | PulseKind::PiSech => {
                -(self.mu / self.tau) * ((t - self.t_center) / self.tau).tanh()
            }
            PulseKind::GaussianSignal => -self.carrier_offset,
        }
    }

    /// Largest `|dφ/dt|` reached over the window.
    pub fn max_phase_rate(&self) -> f64 {
        match self.kind {
            PulseKind::SechChirp | PulseKind::PiSech => {
                (self.mu / self.tau).abs() * (self.window_halfwidth / self.tau).tanh()
            }
            PulseKind::GaussianSignal => self.carrier_offset.abs(),
        }
    }
}

/// Complex Rabi frequency of `spec` at time `t` (rad/µs).
pub fn pulse_envelope(spec: &PulseSpec, t: f64) -> C64 {
    C64::from_polar(spec.amplitude(t), spec.phase(t))
}

/// Samples the envelope on `n` points starting at `t_start` with step `dt`.
pub fn sample_envelope(spec: &PulseSpec, t_start: f64, dt: f64, n: usize) -> Vec<C64> {
    (0..n)
        .map(|k| pulse_envelope(spec, t_start + k as f64 * dt))
        .collect()
}

fn sech(x: f64) -> f64 {
    let ax = x.abs();
    if ax > 350.0 {
        0.0
    } else {
        let e = (-ax).exp();
        2.0 * e / (1.0 + e * e)
    }
}

fn ln_cosh(x: f64) -> f64 {
    let ax = x.abs();
    ax + (-2.0 * ax).exp().ln_1p() - std::f64::consts::LN_2
}
