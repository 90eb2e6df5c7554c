//! Strong control-pulse propagation: the background pairs are integrated
//! exactly at every slice while the field is advanced in ζ by a
//! predictor–corrector step.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::atom::{Propagator2, StepTable};
use crate::error::{Error, Result};
use crate::model::pulse::sample_envelope;
use crate::model::{Direction, EnsembleState, FieldEnvelope, LineShape, PulseSpec, SimGrid, TimeGrid};

/// Atoms per parallel work item. Fixed so that reductions do not depend on
/// the number of worker threads.
pub(crate) const CHUNK: usize = 32;

/// Largest accepted relative change of field energy across one ζ step.
pub const MAX_STEP_ENERGY_CHANGE: f64 = 0.5;

pub struct PropagationProblem<'a> {
    pub line: &'a LineShape,
    pub grid: &'a SimGrid,
    /// Incident pulse at the entry face; its direction selects the coupled pairs.
    pub pulse: &'a PulseSpec,
}

/// Field history of one control pulse and the per-atom window propagators,
/// both in physical ζ order.
#[derive(Debug, Clone)]
pub struct ControlPassage {
    pub field: FieldEnvelope,
    /// `[ζ][Δ]` layout.
    pub propagators: Vec<Propagator2>,
}

impl ControlPassage {
    pub fn duration(&self) -> f64 {
        self.field.time.duration()
    }
}

pub(crate) fn check_epoch(state: &EnsembleState, t: f64) -> Result<()> {
    if (state.epoch - t).abs() > 1e-9 * (1.0 + t.abs()) {
        return Err(Error::Schedule(format!(
            "ensemble is at t = {} but the next window starts at {t}",
            state.epoch
        )));
    }
    Ok(())
}

/// Physical slice index visited at march step `i`.
pub(crate) fn slice_at(direction: Direction, n_zeta: usize, i: usize) -> usize {
    match direction {
        Direction::Forward => i,
        Direction::Backward => n_zeta - 1 - i,
    }
}

/// The change is measured against the larger of the two energies, so growth
/// and decay by the same factor are judged alike.
pub(crate) fn check_energy_step(before: f64, after: f64, depth: f64) -> Result<()> {
    let scale = before.max(after);
    if scale > 0.0 && (after - before).abs() / scale > MAX_STEP_ENERGY_CHANGE || !after.is_finite() {
        return Err(Error::Numerical(format!(
            "ζ step unstable at depth {depth:.4}: field energy {before:.6e} → {after:.6e}"
        )));
    }
    Ok(())
}

struct SliceEval {
    polarization: Vec<C64>,
    propagators: Vec<Propagator2>,
}

/// Propagates one control pulse through the medium and applies the resulting
/// window propagators to every tracked pair of `state`.
pub fn propagate_control(problem: &PropagationProblem, state: &mut EnsembleState) -> Result<ControlPassage> {
    let PropagationProblem { line, grid, pulse } = *problem;
    pulse.validate()?;
    line.validate()?;
    grid.validate()?;
    let (ta, tb) = pulse.window();
    check_epoch(state, ta)?;
    let time = TimeGrid::covering(ta, tb, grid.dt);
    let direction = pulse.direction;
    let shift = direction.index_shift();
    let n_delta = grid.n_delta();
    let n_zeta = grid.n_zeta();
    let kappa = line.kappa();
    let h = grid.zeta_step();
    let wg: Vec<f64> = grid
        .delta
        .iter()
        .zip(&grid.weights)
        .map(|(d, w)| w * line.density(*d))
        .collect();

    // Background pairs (α_n, β_{n+d}) at the window start.
    let pairs: Vec<(i32, i32)> = {
        let mut p: Vec<(i32, i32)> = state.background.ground.keys().map(|&n| (n, n + shift)).collect();
        for &m in state.background.excited.keys() {
            if !p.contains(&(m - shift, m)) {
                p.push((m - shift, m));
            }
        }
        p.sort_unstable();
        p
    };
    let zero = C64::new(0.0, 0.0);
    let initial = |j: usize, i: usize| -> Vec<[C64; 2]> {
        let k = state.index(j, i);
        pairs
            .iter()
            .map(|(n, m)| {
                [
                    state.background.ground.get(n).map_or(zero, |v| v[k]),
                    state.background.excited.get(m).map_or(zero, |v| v[k]),
                ]
            })
            .collect()
    };

    let eval = |field: &[C64], j: usize, with_u: bool| -> SliceEval {
        let table = StepTable::new(field, time.dt);
        let chunks: Vec<(Vec<C64>, Vec<Propagator2>)> = (0..n_delta)
            .collect::<Vec<_>>()
            .par_chunks(CHUNK)
            .map(|idx| {
                let mut acc = vec![zero; time.n];
                let mut props = Vec::with_capacity(if with_u { idx.len() } else { 0 });
                let mut states: Vec<[C64; 2]> = Vec::with_capacity(pairs.len() + 2);
                for &i in idx {
                    states.clear();
                    let off = if with_u {
                        states.push([C64::new(1.0, 0.0), zero]);
                        states.push([zero, C64::new(1.0, 0.0)]);
                        2
                    } else {
                        0
                    };
                    states.extend(initial(j, i));
                    let w = wg[i];
                    table.evolve_many(grid.delta[i], &mut states, |k, st| {
                        let mut p = zero;
                        for s in &st[off..] {
                            p += s[0].conj() * s[1];
                        }
                        acc[k] += p * w;
                    });
                    if with_u {
                        props.push(Propagator2::from_columns(states[0], states[1]));
                    }
                }
                (acc, props)
            })
            .collect();
        let mut polarization = vec![zero; time.n];
        let mut propagators = Vec::with_capacity(if with_u { n_delta } else { 0 });
        for (acc, props) in chunks {
            for (p, a) in polarization.iter_mut().zip(&acc) {
                *p += a;
            }
            propagators.extend(props);
        }
        SliceEval {
            polarization,
            propagators,
        }
    };

    let mut field = FieldEnvelope::zeros(direction, grid.zeta.clone(), time);
    let mut propagators = vec![Propagator2::IDENTITY; n_delta * n_zeta];
    let mut omega = sample_envelope(pulse, ta, time.dt, time.n);
    let phase_rate = pulse.max_phase_rate();
    let i_k = C64::new(0.0, kappa);

    let mut j = slice_at(direction, n_zeta, 0);
    grid.check_resolution(time.dt, peak(&omega), phase_rate)?;
    let mut current = eval(&omega, j, true);
    for step in 0..n_zeta {
        field.samples[j] = omega.clone();
        propagators[j * n_delta..(j + 1) * n_delta].copy_from_slice(&current.propagators);
        if step + 1 == n_zeta {
            break;
        }
        let next = slice_at(direction, n_zeta, step + 1);
        let predicted: Vec<C64> = omega
            .iter()
            .zip(&current.polarization)
            .map(|(o, p)| o + i_k * p * h)
            .collect();
        let trial = eval(&predicted, next, false);
        let corrected: Vec<C64> = omega
            .iter()
            .zip(current.polarization.iter().zip(&trial.polarization))
            .map(|(o, (p0, p1))| o + i_k * (p0 + p1) * (0.5 * h))
            .collect();
        check_energy_step(
            crate::model::field::trapezoid_energy(&omega, time.dt),
            crate::model::field::trapezoid_energy(&corrected, time.dt),
            (step + 1) as f64 * h,
        )?;
        grid.check_resolution(time.dt, peak(&corrected), phase_rate)?;
        omega = corrected;
        j = next;
        current = eval(&omega, j, true);
    }
    if omega.iter().any(|z| !z.is_finite()) {
        return Err(Error::Numerical("non-finite field after control march".into()));
    }
    state.apply_control(direction, &propagators, time.duration())?;
    Ok(ControlPassage { field, propagators })
}

fn peak(x: &[C64]) -> f64 {
    x.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Both control passages through a ground-state medium, computed once to the
/// deepest ζ of `grid`. Slices depend only on depth from the entry face, so
/// any shorter medium reuses the leading slices.
#[derive(Debug, Clone)]
pub struct ControlPairMap {
    pub direction: Direction,
    /// Depth from the entry face for each stored slice.
    pub depth: Vec<f64>,
    pub n_delta: usize,
    /// Free interval between the two control windows.
    pub gap: f64,
    pub first: ControlPassage,
    pub second: ControlPassage,
}

pub fn propagate_control_pair(line: &LineShape, grid: &SimGrid, c1: &PulseSpec, c2: &PulseSpec) -> Result<ControlPairMap> {
    if c1.direction != c2.direction {
        return Err(Error::Config("control pulses must travel in the same direction".into()));
    }
    let (a1, b1) = c1.window();
    let (a2, _) = c2.window();
    let gap = a2 - b1;
    if gap < 0.0 {
        return Err(Error::Schedule(format!(
            "second control window starts at {a2}, before the first ends at {b1}"
        )));
    }
    let mut state = EnsembleState::ground(grid.n_delta(), grid.n_zeta(), a1);
    let first = propagate_control(&PropagationProblem { line, grid, pulse: c1 }, &mut state)?;
    state.free_evolve(grid, gap)?;
    let second = propagate_control(&PropagationProblem { line, grid, pulse: c2 }, &mut state)?;
    Ok(ControlPairMap {
        direction: c1.direction,
        depth: grid.zeta.clone(),
        n_delta: grid.n_delta(),
        gap,
        first,
        second,
    })
}

impl ControlPairMap {
    /// Propagators of both passages for a medium of `n_zeta` nodes, in that
    /// medium's physical ζ order.
    pub fn propagators_for(&self, n_zeta: usize) -> Result<(Vec<Propagator2>, Vec<Propagator2>)> {
        let n_long = self.depth.len();
        if n_zeta == 0 || n_zeta > n_long {
            return Err(Error::Config(format!(
                "control map covers {n_long} slices, {n_zeta} requested"
            )));
        }
        let nd = self.n_delta;
        let pick = |pass: &ControlPassage| -> Vec<Propagator2> {
            let mut out = Vec::with_capacity(n_zeta * nd);
            for j in 0..n_zeta {
                // slice_at is an involution: physical index ↔ depth index
                let depth = slice_at(self.direction, n_zeta, j);
                let jl = slice_at(self.direction, n_long, depth);
                out.extend_from_slice(&pass.propagators[jl * nd..(jl + 1) * nd]);
            }
            out
        };
        Ok((pick(&self.first), pick(&self.second)))
    }

    /// Field trace of each passage at `depth_index` slices from the entry face.
    pub fn traces_at_depth(&self, depth_index: usize) -> (Vec<C64>, Vec<C64>) {
        let jl = slice_at(self.direction, self.depth.len(), depth_index);
        (self.first.field.samples[jl].clone(), self.second.field.samples[jl].clone())
    }

    /// Per-slice propagators reordered by depth from the entry face.
    pub fn by_depth(&self) -> (Vec<Propagator2>, Vec<Propagator2>) {
        self.propagators_for(self.depth.len())
            .map(|(a, b)| match self.direction {
                Direction::Forward => (a, b),
                Direction::Backward => (reverse_slices(&a, self.n_delta), reverse_slices(&b, self.n_delta)),
            })
            .expect("full-length request is always valid")
    }
}

fn reverse_slices<T: Clone>(v: &[T], width: usize) -> Vec<T> {
    v.chunks(width).rev().flat_map(|c| c.iter().cloned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Schedule;

    fn setup(zeta_len: f64) -> (LineShape, SimGrid, PulseSpec) {
        let line = LineShape::flat(24.0);
        let grid = SimGrid::with_delta_step(&line, 0.1, zeta_len, 0.1, 0.1 / 45.0).unwrap();
        (line, grid, PulseSpec::sech_chirp(10.0, 0.5, -5.0))
    }

    fn run(line: &LineShape, grid: &SimGrid, pulse: &PulseSpec) -> (ControlPassage, EnsembleState) {
        let mut state = EnsembleState::ground(grid.n_delta(), grid.n_zeta(), pulse.window().0);
        let pass = propagate_control(&PropagationProblem { line, grid, pulse }, &mut state).unwrap();
        (pass, state)
    }

    #[test]
    fn vanishing_depth_leaves_pulse_unchanged() {
        let (line, _, pulse) = setup(0.0);
        let grid = SimGrid::with_delta_step(&line, 0.1, 1e-10, 1e-10, 0.1 / 45.0).unwrap();
        assert_eq!(grid.n_zeta(), 2);
        let (pass, _) = run(&line, &grid, &pulse);
        let (a, b) = (&pass.field.samples[0], &pass.field.samples[1]);
        let peak = a.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let dev = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
        assert!(dev < 1e-8 * peak, "{dev}");
    }

    #[test]
    fn field_energy_lost_equals_excitation_gained() {
        let (line, grid, pulse) = setup(1.0);
        let (pass, state) = run(&line, &grid, &pulse);
        let dt = pass.field.time.dt;
        let lost = trapezoid_energy_of(&pass.field.samples[0], dt) - trapezoid_energy_of(pass.field.samples.last().unwrap(), dt);
        // 2κ ∫dζ ∫ g |β|² dΔ
        let per_slice: Vec<f64> = (0..grid.n_zeta())
            .map(|j| {
                (0..grid.n_delta())
                    .map(|i| {
                        let k = state.index(j, i);
                        let exc: f64 = state.background.excited.values().map(|b| b[k].norm_sqr()).sum();
                        grid.weights[i] * line.density(grid.delta[i]) * exc
                    })
                    .sum()
            })
            .collect();
        let h = grid.zeta_step();
        let integral: f64 = per_slice.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
        let gained = 2.0 * line.kappa() * integral;
        assert!(lost > 0.0);
        assert!((lost - gained).abs() < 0.01 * lost, "lost {lost} gained {gained}");
    }

    fn trapezoid_energy_of(x: &[C64], dt: f64) -> f64 {
        crate::model::field::trapezoid_energy(x, dt)
    }

    #[test]
    fn backward_march_is_the_reflected_forward_march() {
        let (line, grid, pulse) = setup(0.5);
        let (fwd, sf) = run(&line, &grid, &pulse);
        let (bwd, sb) = run(&line, &grid, &pulse.clone().travelling(Direction::Backward));
        let n = grid.n_zeta();
        let nd = grid.n_delta();
        for j in 0..n {
            assert_eq!(fwd.field.samples[j], bwd.field.samples[n - 1 - j]);
            assert_eq!(
                fwd.propagators[j * nd..(j + 1) * nd],
                bwd.propagators[(n - 1 - j) * nd..(n - j) * nd]
            );
        }
        // forward couples β₁, backward β₋₁
        let k = sf.index(0, nd / 2);
        let kb = sb.index(n - 1, nd / 2);
        assert_eq!(sf.background.excited[&1][k], sb.background.excited[&-1][kb]);
    }

    #[test]
    fn first_pulse_is_absorbed_second_is_amplified() {
        let (line, grid, pulse) = setup(2.0);
        let s = Schedule::packed(0.0, 2.5, pulse.window_halfwidth, 0.5);
        let map = propagate_control_pair(&line, &grid, &pulse.clone().centered_at(s.t1), &pulse.clone().centered_at(s.t2))
            .unwrap();
        let exit = grid.n_zeta() - 1;
        let (e1_in, e1_out) = (map.first.field.energy(0), map.first.field.energy(exit));
        let (e2_in, e2_out) = (map.second.field.energy(0), map.second.field.energy(exit));
        assert!(e1_out < 0.9 * e1_in, "{e1_in} → {e1_out}");
        assert!(e2_out > e2_in, "{e2_in} → {e2_out}");
    }

    #[test]
    fn energy_step_check_is_symmetric() {
        assert!(check_energy_step(1.0, 1.9, 0.1).is_ok());
        assert!(check_energy_step(1.9, 1.0, 0.1).is_ok());
        assert!(check_energy_step(1.0, 2.1, 0.1).is_err());
        assert!(check_energy_step(2.1, 1.0, 0.1).is_err());
        assert!(check_energy_step(1.0, f64::NAN, 0.1).is_err());
        assert!(check_energy_step(0.0, 0.0, 0.1).is_ok());
    }

    #[test]
    fn map_slices_are_shared_by_shorter_media() {
        let (line, grid, pulse) = setup(0.6);
        let pulse = pulse.travelling(Direction::Backward);
        let s = Schedule::packed(0.0, 2.5, pulse.window_halfwidth, 0.5);
        let (c1, c2) = (pulse.clone().centered_at(s.t1), pulse.clone().centered_at(s.t2));
        let long = propagate_control_pair(&line, &grid, &c1, &c2).unwrap();
        let short_grid = grid.truncated(4);
        let short = propagate_control_pair(&line, &short_grid, &c1, &c2).unwrap();
        let (u1, u2) = long.propagators_for(4).unwrap();
        assert_eq!(u1, short.first.propagators);
        assert_eq!(u2, short.second.propagators);
    }
}
