//! Figures of merit for a stored and retrieved pulse.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Direction, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoReport {
    pub eta: f64,
    pub xi: f64,
    /// Arrival delay of the echo relative to the signal (µs).
    pub best_delay: f64,
    pub signal_energy: f64,
    pub echo_energy: f64,
}

impl EchoReport {
    /// `nominal_delay` centres the fidelity search, which spans `±search_half`.
    pub fn evaluate(signal: &TimeSeries, echo: &TimeSeries, nominal_delay: f64, search_half: f64) -> Result<Self> {
        let eta = efficiency(signal, echo)?;
        let (xi, best_delay) = fidelity(signal, echo, nominal_delay, search_half)?;
        Ok(EchoReport {
            eta,
            xi,
            best_delay,
            signal_energy: signal.energy(),
            echo_energy: echo.energy(),
        })
    }
}

/// `η = ∫|E_e|² / ∫|E_s|²`.
pub fn efficiency(signal: &TimeSeries, echo: &TimeSeries) -> Result<f64> {
    let es = signal.energy();
    if !(es > 0.0) {
        return Err(Error::Domain("signal energy is zero".into()));
    }
    Ok(echo.energy() / es)
}

/// Linear interpolation of `x` at time `t`; zero outside its window.
fn sample_at(x: &TimeSeries, t: f64) -> C64 {
    let u = (t - x.time.t_start) / x.time.dt;
    if u < 0.0 || u > (x.time.n - 1) as f64 {
        return C64::new(0.0, 0.0);
    }
    let k = (u.floor() as usize).min(x.time.n.saturating_sub(2));
    let f = u - k as f64;
    if x.time.n < 2 {
        return x.samples[0];
    }
    x.samples[k] * (1.0 - f) + x.samples[k + 1] * f
}

/// `|∫ E_e(t + d) E_s*(t) dt|` on the signal's time grid.
fn overlap(signal: &TimeSeries, echo: &TimeSeries, d: f64) -> f64 {
    let n = signal.time.n;
    let mut acc = C64::new(0.0, 0.0);
    for (k, s) in signal.samples.iter().enumerate() {
        let w = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
        acc += sample_at(echo, signal.time.t(k) + d) * s.conj() * w;
    }
    acc.norm() * signal.time.dt
}

/// `ξ = max_d |∫E_e(t+d)E_s*(t)dt| / √(E_s E_e)` over
/// `d ∈ nominal ± search_half`, returning `(ξ, d)`. The grid search uses the
/// signal step and is refined by a parabola through the best three points.
/// Interpolation can push the ratio a hair above one; it is capped there.
pub fn fidelity(signal: &TimeSeries, echo: &TimeSeries, nominal_delay: f64, search_half: f64) -> Result<(f64, f64)> {
    let es = signal.energy();
    let ee = echo.energy();
    if !(es > 0.0) {
        return Err(Error::Domain("signal energy is zero".into()));
    }
    if !(ee > 0.0) {
        return Err(Error::Domain("echo energy is zero".into()));
    }
    if !(search_half >= 0.0) {
        return Err(Error::Domain(format!("search half-range {search_half} must be >= 0")));
    }
    let h = signal.time.dt;
    let steps = (search_half / h).floor() as i64;
    let at = |i: i64| nominal_delay + i as f64 * h;
    let mut best = (-steps, overlap(signal, echo, at(-steps)));
    let mut values = Vec::with_capacity((2 * steps + 1) as usize);
    for i in -steps..=steps {
        let v = overlap(signal, echo, at(i));
        values.push(v);
        if v > best.1 {
            best = (i, v);
        }
    }
    let (i, v) = best;
    let mut delay = at(i);
    let mut peak = v;
    if i > -steps && i < steps {
        let y0 = values[(i - 1 + steps) as usize];
        let y2 = values[(i + 1 + steps) as usize];
        let curv = y0 - 2.0 * v + y2;
        if curv < 0.0 {
            let off = 0.5 * (y0 - y2) / curv;
            let d = at(i) + off * h;
            let refined = overlap(signal, echo, d);
            if refined > peak {
                peak = refined;
                delay = d;
            }
        }
    }
    Ok(((peak / (es * ee).sqrt()).min(1.0), delay))
}

/// Best efficiency of CRIB at optical length `zeta_l`: `(1 − e^{−ζ})²` for a
/// backward echo, `ζ² e^{−ζ}` for a forward one. NaN for negative lengths.
pub fn crib_reference(zeta_l: f64, direction: Direction) -> f64 {
    if !(zeta_l >= 0.0) {
        return f64::NAN;
    }
    match direction {
        Direction::Backward => (1.0 - (-zeta_l).exp()).powi(2),
        Direction::Forward => zeta_l * zeta_l * (-zeta_l).exp(),
    }
}

/// `∫P_e^C dΔ / ∫P_e^π dΔ` per ζ row, flat weights in Δ. Each map is
/// `[ζ][Δ]` on its own Δ nodes (trapezoid rule); both need the same rows.
pub fn excitation_ratio(
    chirped: &[Vec<f64>],
    chirped_delta: &[f64],
    pi: &[Vec<f64>],
    pi_delta: &[f64],
) -> Result<Vec<f64>> {
    if chirped.len() != pi.len() {
        return Err(Error::Config(format!(
            "excitation maps have {} and {} ζ rows",
            chirped.len(),
            pi.len()
        )));
    }
    chirped
        .iter()
        .zip(pi)
        .map(|(c, p)| {
            let num = trapezoid(chirped_delta, c)?;
            let den = trapezoid(pi_delta, p)?;
            if !(den > 0.0) {
                return Err(Error::Domain("π-pair excitation integral is zero".into()));
            }
            Ok(num / den)
        })
        .collect()
}

fn trapezoid(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Config(format!("{} nodes for {} values", x.len(), y.len())));
    }
    Ok(x.windows(2).zip(y.windows(2)).map(|(a, b)| 0.5 * (a[1] - a[0]) * (b[0] + b[1])).sum())
}
