//! Fixed-step fourth-order integrator for the driven two-level pair
//!
//! ```text
//! dα/dt = (i/2) Ω* β
//! dβ/dt = (i/2) Ω α − iΔ β
//! ```
//!
//! Each step applies the exact exponential of a fourth-order Magnus
//! generator (one commutator) built from the samples at `t`, `t + h/2` and `t + h`,
//! so every step is unitary to rounding.

use num_complex::Complex64 as C64;

use super::propagator::Propagator2;
use crate::error::{Error, Result};
use crate::model::grid::RESOLUTION_LIMIT;
use crate::model::TimeSeries;

/// Per-step field coefficients shared by every atom driven by one trace.
#[derive(Debug, Clone)]
pub struct StepTable {
    pub dt: f64,
    s: Vec<C64>,
    r: Vec<C64>,
    m: Vec<f64>,
}

impl StepTable {
    /// Precomputes step coefficients for samples on a uniform grid. Midpoint
    /// values come from cubic interpolation (quadratic at the two end steps).
    pub fn new(samples: &[C64], dt: f64) -> Self {
        let n = samples.len();
        let steps = n.saturating_sub(1);
        let mut s = Vec::with_capacity(steps);
        let mut r = Vec::with_capacity(steps);
        let mut m = Vec::with_capacity(steps);
        for k in 0..steps {
            let o1 = samples[k];
            let o3 = samples[k + 1];
            let o2 = midpoint(samples, k);
            s.push((o1 + o2 * 4.0 + o3) * (dt / 12.0));
            r.push((o3 - o1) * (dt * dt / 24.0));
            m.push((o3.conj() * o1).im * (dt * dt / 24.0));
        }
        StepTable { dt, s, r, m }
    }

    pub fn steps(&self) -> usize {
        self.s.len()
    }

    /// One-step propagator for detuning `delta`, with `half = e^{-iΔh/2}`.
    #[inline(always)]
    fn step(&self, k: usize, delta: f64, half: C64) -> [C64; 4] {
        let p = 0.5 * self.dt * delta - self.m[k];
        let q = self.s[k] + C64::new(0.0, delta) * self.r[k];
        let th2 = p * p + q.norm_sqr();
        let (c, sc) = cos_sinc(th2);
        let isc = C64::new(0.0, sc);
        [
            half * C64::new(c, sc * p),
            half * isc * q.conj(),
            half * isc * q,
            half * C64::new(c, -sc * p),
        ]
    }

    /// Advances several pairs at once; `observe(k, states)` sees the states at
    /// every sample `k = 0..=steps`.
    #[inline]
    pub fn evolve_many<F: FnMut(usize, &[[C64; 2]])>(&self, delta: f64, states: &mut [[C64; 2]], mut observe: F) {
        let half = C64::from_polar(1.0, -0.5 * self.dt * delta);
        observe(0, states);
        for k in 0..self.steps() {
            let u = self.step(k, delta, half);
            for st in states.iter_mut() {
                let a = u[0] * st[0] + u[1] * st[1];
                let b = u[2] * st[0] + u[3] * st[1];
                *st = [a, b];
            }
            observe(k + 1, states);
        }
    }

    /// Final state of a single pair.
    pub fn evolve(&self, delta: f64, initial: [C64; 2]) -> [C64; 2] {
        let mut st = [initial];
        self.evolve_many(delta, &mut st, |_, _| {});
        st[0]
    }

    /// Whole-window propagator.
    pub fn propagator(&self, delta: f64) -> Propagator2 {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let mut st = [[one, zero], [zero, one]];
        self.evolve_many(delta, &mut st, |_, _| {});
        Propagator2::from_columns(st[0], st[1])
    }
}

fn midpoint(x: &[C64], k: usize) -> C64 {
    let n = x.len();
    if n < 3 {
        return (x[k] + x[k + 1]) * 0.5;
    }
    if k == 0 {
        return (x[0] * 3.0 + x[1] * 6.0 - x[2]) / 8.0;
    }
    if k + 2 >= n {
        return (x[n - 1] * 3.0 + x[n - 2] * 6.0 - x[n - 3]) / 8.0;
    }
    (x[k] * 9.0 + x[k + 1] * 9.0 - x[k - 1] - x[k + 2]) / 16.0
}

/// `(cos θ, sin θ / θ)` from `θ²`.
#[inline(always)]
fn cos_sinc(th2: f64) -> (f64, f64) {
    if th2 < 0.05 {
        let x = th2;
        let c = 1.0 - x / 2.0 * (1.0 - x / 12.0 * (1.0 - x / 30.0 * (1.0 - x / 56.0 * (1.0 - x / 90.0))));
        let s = 1.0 - x / 6.0 * (1.0 - x / 20.0 * (1.0 - x / 42.0 * (1.0 - x / 72.0 * (1.0 - x / 110.0))));
        (c, s)
    } else {
        let th = th2.sqrt();
        (th.cos(), th.sin() / th)
    }
}

/// Upper bound on `|dφ/dt|` estimated from consecutive samples whose
/// magnitude exceeds `10⁻³` of the peak.
pub fn sampled_phase_rate(series: &TimeSeries) -> f64 {
    let floor = 1e-3 * series.peak();
    let dt = series.time.dt;
    series
        .samples
        .windows(2)
        .filter(|w| w[0].norm() > floor && w[1].norm() > floor)
        .map(|w| (w[0].conj() * w[1]).arg().abs() / dt)
        .fold(0.0, f64::max)
}

/// Resolution guard for a single atom: `dt · max(|Ω|, |φ'| + |Δ|, |Δ|) ≤ 0.1`.
pub fn check_step(series: &TimeSeries, delta: f64) -> Result<()> {
    let dt = series.time.dt;
    let rate = series.peak().max(sampled_phase_rate(series) + delta.abs());
    if dt * rate > RESOLUTION_LIMIT * (1.0 + 1e-9) {
        return Err(Error::Config(format!(
            "resolution guard violated: dt·rate = {:.4} > {RESOLUTION_LIMIT} (dt = {dt}, Δ = {delta})",
            dt * rate
        )));
    }
    Ok(())
}

/// Integrates one pair across the whole trace.
pub fn evolve_pair(field: &TimeSeries, delta: f64, initial: [C64; 2]) -> Result<[C64; 2]> {
    check_step(field, delta)?;
    Ok(StepTable::new(&field.samples, field.time.dt).evolve(delta, initial))
}

/// Propagator over the trace; columns are the images of the basis states.
pub fn control_propagator(field: &TimeSeries, delta: f64) -> Result<Propagator2> {
    check_step(field, delta)?;
    Ok(StepTable::new(&field.samples, field.time.dt).propagator(delta))
}
