//! Weak-field propagation, first order in the field.
//!
//! With no strong field present the background amplitudes only precess, so
//! every coupled pair `(α_n, β_{n+d})` responds to the weak field through
//! `I(t) = ∫ Ω(t') e^{iΔ(t'−t_s)} dt'` alone:
//!
//! ```text
//! β⁽¹⁾(t) = e^{−iΔ(t−t_s)} [β⁽¹⁾(t_s) + (i/2) α⁽⁰⁾ I(t)]
//! α⁽¹⁾(t) = α⁽¹⁾(t_s) + (i/2) β⁽⁰⁾(t_s) I(t)*
//! ```
//!
//! Signal absorption and echo emission are the same march with different
//! entry fields and initial probe amplitudes.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::control::{check_energy_step, check_epoch, slice_at, CHUNK};
use crate::atom::integrator::sampled_phase_rate;
use crate::error::{Error, Result};
use crate::model::field::trapezoid_energy;
use crate::model::pulse::sample_envelope;
use crate::model::{Direction, EnsembleState, FieldEnvelope, LineShape, PulseSpec, SimGrid, TimeGrid, TimeSeries};

/// Output of a weak-field march.
#[derive(Debug, Clone)]
pub struct WeakPassage {
    pub field: FieldEnvelope,
    /// Largest `|𝓟_d(ζ, t)|` encountered along the march.
    pub peak_polarization: f64,
}

/// Per-atom source data for one slice: `C = Σ (α⁽⁰⁾* β⁽¹⁾ + α⁽¹⁾* β⁽⁰⁾)` and
/// `W = Σ |α⁽⁰⁾|² − Σ |β⁽⁰⁾|²`.
fn sources(state: &EnsembleState, shift: i32, j: usize) -> (Vec<C64>, Vec<f64>) {
    let nd = state.n_delta;
    let base = j * nd;
    let mut c = vec![C64::new(0.0, 0.0); nd];
    let mut w = vec![0.0; nd];
    for (&m, b) in &state.probe.excited {
        if let Some(a0) = state.background.ground.get(&(m - shift)) {
            for i in 0..nd {
                c[i] += a0[base + i].conj() * b[base + i];
            }
        }
    }
    for (&n, a) in &state.probe.ground {
        if let Some(b0) = state.background.excited.get(&(n + shift)) {
            for i in 0..nd {
                c[i] += a[base + i].conj() * b0[base + i];
            }
        }
    }
    for a0 in state.background.ground.values() {
        for i in 0..nd {
            w[i] += a0[base + i].norm_sqr();
        }
    }
    for b0 in state.background.excited.values() {
        for i in 0..nd {
            w[i] -= b0[base + i].norm_sqr();
        }
    }
    (c, w)
}

/// Cumulative `∫₀^{t_k} f dt` on a uniform grid, fourth order in the interior.
fn cumulative(f: &[C64], h: f64, out: &mut [C64]) {
    let n = f.len();
    out[0] = C64::new(0.0, 0.0);
    if n < 4 {
        for k in 1..n {
            out[k] = out[k - 1] + (f[k - 1] + f[k]) * (0.5 * h);
        }
        return;
    }
    out[1] = (f[0] * 5.0 + f[1] * 8.0 - f[2]) * (h / 12.0);
    for k in 1..n - 2 {
        out[k + 1] = out[k] + (f[k] * 13.0 + f[k + 1] * 13.0 - f[k - 1] - f[k + 2]) * (h / 24.0);
    }
    out[n - 1] = out[n - 2] + (f[n - 1] * 5.0 + f[n - 2] * 8.0 - f[n - 3]) * (h / 12.0);
}

/// Steps after which a source-driven field is subject to the energy check.
const SETTLE_STEPS: usize = 4;

/// Phasor recurrence restarts from an exact value every this many steps.
const RESEED: usize = 256;

struct SliceEval {
    polarization: Vec<C64>,
    integral: Vec<C64>,
}

/// Marches a weak field of `direction` through the medium over `time`,
/// starting from `incident` at the entry face, and advances `state` to the
/// end of the window.
pub fn weak_march(
    state: &mut EnsembleState,
    direction: Direction,
    incident: &[C64],
    time: TimeGrid,
    grid: &SimGrid,
    line: &LineShape,
) -> Result<WeakPassage> {
    grid.validate()?;
    line.validate()?;
    if incident.len() != time.n {
        return Err(Error::Config(format!(
            "incident field has {} samples, window has {}",
            incident.len(),
            time.n
        )));
    }
    check_epoch(state, time.t_start)?;
    let entry = TimeSeries::new(time, incident.to_vec());
    let phase_rate = sampled_phase_rate(&entry);
    grid.check_resolution(time.dt, entry.peak(), phase_rate)?;
    let shift = direction.index_shift();
    let n_delta = grid.n_delta();
    let n_zeta = grid.n_zeta();
    let h = grid.zeta_step();
    let dt = time.dt;
    let zero = C64::new(0.0, 0.0);
    let i_k = C64::new(0.0, line.kappa());
    let wg: Vec<f64> = grid
        .delta
        .iter()
        .zip(&grid.weights)
        .map(|(d, w)| w * line.density(*d))
        .collect();
    let src: Vec<(Vec<C64>, Vec<f64>)> = (0..n_zeta).map(|j| sources(state, shift, j)).collect();

    let eval = |field: &[C64], j: usize| -> SliceEval {
        let (c, w) = &src[j];
        let chunks: Vec<(Vec<C64>, Vec<C64>)> = (0..n_delta)
            .collect::<Vec<_>>()
            .par_chunks(CHUNK)
            .map(|idx| {
                let mut acc = vec![zero; time.n];
                let mut ends = Vec::with_capacity(idx.len());
                let mut f = vec![zero; time.n];
                let mut cum = vec![zero; time.n];
                let mut rot = vec![zero; time.n];
                for &i in idx {
                    let delta = grid.delta[i];
                    let step = C64::from_polar(1.0, delta * dt);
                    for k in 0..time.n {
                        rot[k] = if k % RESEED == 0 {
                            C64::from_polar(1.0, delta * dt * k as f64)
                        } else {
                            rot[k - 1] * step
                        };
                    }
                    for k in 0..time.n {
                        f[k] = field[k] * rot[k];
                    }
                    cumulative(&f, dt, &mut cum);
                    let (ci, half_w) = (c[i], C64::new(0.0, 0.5 * w[i]));
                    let scale = wg[i];
                    if ci != zero || w[i] != 0.0 {
                        for k in 0..time.n {
                            acc[k] += rot[k].conj() * (ci + half_w * cum[k]) * scale;
                        }
                    }
                    ends.push(cum[time.n - 1]);
                }
                (acc, ends)
            })
            .collect();
        let mut polarization = vec![zero; time.n];
        let mut integral = Vec::with_capacity(n_delta);
        for (acc, ends) in chunks {
            for (p, a) in polarization.iter_mut().zip(&acc) {
                *p += a;
            }
            integral.extend(ends);
        }
        SliceEval {
            polarization,
            integral,
        }
    };

    let mut field = FieldEnvelope::zeros(direction, grid.zeta.clone(), time);
    let mut integrals = vec![zero; n_delta * n_zeta];
    let mut omega = incident.to_vec();
    let mut peak_polarization = 0.0f64;
    let driven = entry.energy() > 0.0;
    let mut j = slice_at(direction, n_zeta, 0);
    let mut current = eval(&omega, j);
    for step in 0..n_zeta {
        field.samples[j] = omega.clone();
        integrals[j * n_delta..(j + 1) * n_delta].copy_from_slice(&current.integral);
        peak_polarization = current.polarization.iter().fold(peak_polarization, |m, p| m.max(p.norm()));
        if step + 1 == n_zeta {
            break;
        }
        let next = slice_at(direction, n_zeta, step + 1);
        let predicted: Vec<C64> = omega
            .iter()
            .zip(&current.polarization)
            .map(|(o, p)| o + i_k * p * h)
            .collect();
        let trial = eval(&predicted, next);
        let corrected: Vec<C64> = omega
            .iter()
            .zip(current.polarization.iter().zip(&trial.polarization))
            .map(|(o, (p0, p1))| o + i_k * (p0 + p1) * (0.5 * h))
            .collect();
        let before = trapezoid_energy(&omega, dt);
        let after = trapezoid_energy(&corrected, dt);
        // A source-driven field grows like ζ² from zero; judge it only once
        // it is established a few steps past the entry face.
        if driven || step >= SETTLE_STEPS {
            check_energy_step(before, after, (step + 1) as f64 * h)?;
        }
        omega = corrected;
        j = next;
        current = eval(&omega, j);
    }
    if omega.iter().any(|z| !z.is_finite()) {
        return Err(Error::Numerical("non-finite field after weak march".into()));
    }
    if n_zeta == 1 {
        // zero optical length: there are no atoms to imprint
        integrals.fill(zero);
    }
    let peak = field.samples.iter().flatten().fold(0.0f64, |m, z| m.max(z.norm()));
    grid.check_resolution(time.dt, peak, phase_rate)?;
    apply_weak_update(state, shift, &integrals, grid, time.duration());
    Ok(WeakPassage {
        field,
        peak_polarization,
    })
}

fn apply_weak_update(state: &mut EnsembleState, shift: i32, integrals: &[C64], grid: &SimGrid, duration: f64) {
    let len = state.len();
    let nd = state.n_delta;
    let half_i = C64::new(0.0, 0.5);
    let phase: Vec<C64> = (0..len)
        .map(|k| C64::from_polar(1.0, -grid.delta[k % nd] * duration))
        .collect();
    let mut excited_keys: Vec<i32> = state.probe.excited.keys().copied().collect();
    excited_keys.extend(state.background.ground.keys().map(|n| n + shift));
    excited_keys.sort_unstable();
    excited_keys.dedup();
    let mut ground_keys: Vec<i32> = state.probe.ground.keys().copied().collect();
    ground_keys.extend(state.background.excited.keys().map(|m| m - shift));
    ground_keys.sort_unstable();
    ground_keys.dedup();

    for m in excited_keys {
        let a0 = state.background.ground.get(&(m - shift));
        let b = state.probe.excited.entry(m).or_insert_with(|| vec![C64::new(0.0, 0.0); len]);
        for k in 0..len {
            let drive = a0.map_or(C64::new(0.0, 0.0), |a| half_i * a[k] * integrals[k]);
            b[k] = phase[k] * (b[k] + drive);
        }
    }
    for n in ground_keys {
        let b0 = state.background.excited.get(&(n + shift));
        let a = state.probe.ground.entry(n).or_insert_with(|| vec![C64::new(0.0, 0.0); len]);
        if let Some(b0) = b0 {
            for k in 0..len {
                a[k] += half_i * b0[k] * integrals[k].conj();
            }
        }
    }
    for b0 in state.background.excited.values_mut() {
        for (x, p) in b0.iter_mut().zip(&phase) {
            *x *= p;
        }
    }
    state.epoch += duration;
}

/// Result of storing a weak signal.
#[derive(Debug, Clone)]
pub struct Absorption {
    /// Ensemble at the end of the signal window; the imprinted coherence is
    /// the probe layer.
    pub state: EnsembleState,
    pub field: FieldEnvelope,
    pub transmitted: TimeSeries,
    pub absorbed_fraction: f64,
    pub peak_polarization: f64,
}

/// Propagates a weak signal through a ground-state medium.
pub fn absorb_signal_weak(signal: &PulseSpec, line: &LineShape, grid: &SimGrid) -> Result<Absorption> {
    signal.validate()?;
    let (a, b) = signal.window();
    let time = TimeGrid::covering(a, b, grid.dt);
    let incident = sample_envelope(signal, a, time.dt, time.n);
    let mut state = EnsembleState::ground(grid.n_delta(), grid.n_zeta(), a);
    let pass = weak_march(&mut state, signal.direction, &incident, time, grid, line)?;
    let input = pass.field.energy(pass.field.entry_index());
    let output = pass.field.energy(pass.field.exit_index());
    if !(input > 0.0) {
        return Err(Error::Domain("signal has zero energy".into()));
    }
    Ok(Absorption {
        transmitted: pass.field.exit(),
        absorbed_fraction: 1.0 - output / input,
        peak_polarization: pass.peak_polarization,
        field: pass.field,
        state,
    })
}

/// Source-free march over the echo window; the echo is `field.exit()`.
pub fn emit_echo(
    state: &mut EnsembleState,
    direction: Direction,
    window: TimeGrid,
    grid: &SimGrid,
    line: &LineShape,
) -> Result<FieldEnvelope> {
    let incident = vec![C64::new(0.0, 0.0); window.n];
    Ok(weak_march(state, direction, &incident, window, grid, line)?.field)
}
