//! Spatial-Fourier-mode amplitudes of the atomic ensemble.
//!
//! Amplitudes are split into two layers. The *background* layer holds the
//! strong-field amplitudes driven by the control pulses (initially `α₀ = 1`).
//! The *probe* layer holds amplitudes that are first order in the weak signal
//! field; everything the signal touches lives here, so the echo pipeline is
//! exactly linear in the signal.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64 as C64;

use super::grid::SimGrid;
use super::line::LineShape;
use super::pulse::Direction;
use crate::atom::Propagator2;
use crate::error::{Error, Result};

/// Ground (`α_n`) and excited (`β_n`) amplitudes keyed by Fourier index.
/// Each vector is laid out `[ζ index][Δ index]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModeSet {
    pub ground: BTreeMap<i32, Vec<C64>>,
    pub excited: BTreeMap<i32, Vec<C64>>,
}

impl ModeSet {
    fn pairs(&self, shift: i32) -> BTreeSet<(i32, i32)> {
        let mut out = BTreeSet::new();
        for &n in self.ground.keys() {
            out.insert((n, n + shift));
        }
        for &m in self.excited.keys() {
            out.insert((m - shift, m));
        }
        out
    }

    fn free_evolve(&mut self, phases: &[C64]) {
        for amps in self.excited.values_mut() {
            for (a, p) in amps.iter_mut().zip(phases) {
                *a *= p;
            }
        }
    }

    fn apply_pair(&mut self, shift: i32, u: &[Propagator2], len: usize) {
        for (n, m) in self.pairs(shift) {
            let a = self.ground.remove(&n).unwrap_or_else(|| vec![C64::new(0.0, 0.0); len]);
            let b = self.excited.remove(&m).unwrap_or_else(|| vec![C64::new(0.0, 0.0); len]);
            let mut na = Vec::with_capacity(len);
            let mut nb = Vec::with_capacity(len);
            for ((ua, (x, y)), _) in u.iter().zip(a.iter().zip(&b)).zip(0..len) {
                let (p, q) = ua.apply(*x, *y);
                na.push(p);
                nb.push(q);
            }
            self.ground.insert(n, na);
            self.excited.insert(m, nb);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    pub n_delta: usize,
    pub n_zeta: usize,
    /// Time at which the amplitudes are valid (µs).
    pub epoch: f64,
    pub background: ModeSet,
    pub probe: ModeSet,
}

impl EnsembleState {
    /// All atoms in the ground state: `α₀ = 1`, everything else zero.
    pub fn ground(n_delta: usize, n_zeta: usize, epoch: f64) -> Self {
        let mut background = ModeSet::default();
        background.ground.insert(0, vec![C64::new(1.0, 0.0); n_delta * n_zeta]);
        EnsembleState {
            n_delta,
            n_zeta,
            epoch,
            background,
            probe: ModeSet::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.n_delta * self.n_zeta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, zeta: usize, delta: usize) -> usize {
        zeta * self.n_delta + delta
    }

    fn check_grid(&self, grid: &SimGrid) -> Result<()> {
        if grid.n_delta() != self.n_delta || grid.n_zeta() != self.n_zeta {
            return Err(Error::Config(format!(
                "ensemble is {}×{} (Δ×ζ) but grid is {}×{}",
                self.n_delta,
                self.n_zeta,
                grid.n_delta(),
                grid.n_zeta()
            )));
        }
        Ok(())
    }

    /// Tracked `(n_ground, n_excited)` pairs coupled by a field of `direction`.
    pub fn tracked_pairs(&self, direction: Direction) -> Vec<(i32, i32)> {
        let shift = direction.index_shift();
        let mut all = self.background.pairs(shift);
        all.extend(self.probe.pairs(shift));
        all.into_iter().collect()
    }

    /// Field-free evolution `β_n → β_n e^{-iΔ·duration}` for every tracked mode.
    pub fn free_evolve(&mut self, grid: &SimGrid, duration: f64) -> Result<()> {
        self.check_grid(grid)?;
        if duration < 0.0 {
            return Err(Error::Schedule(format!("negative free-evolution interval {duration}")));
        }
        let per_delta: Vec<C64> = grid
            .delta
            .iter()
            .map(|d| C64::from_polar(1.0, -d * duration))
            .collect();
        let phases: Vec<C64> = (0..self.n_zeta).flat_map(|_| per_delta.iter().copied()).collect();
        self.background.free_evolve(&phases);
        self.probe.free_evolve(&phases);
        self.epoch += duration;
        Ok(())
    }

    /// Applies one 2×2 propagator per atom to every pair the field couples.
    /// `propagators` is laid out like the amplitudes.
    pub fn apply_control(&mut self, direction: Direction, propagators: &[Propagator2], duration: f64) -> Result<()> {
        if propagators.len() != self.len() {
            return Err(Error::Config(format!(
                "{} propagators for {} atoms",
                propagators.len(),
                self.len()
            )));
        }
        let shift = direction.index_shift();
        let len = self.len();
        self.background.apply_pair(shift, propagators, len);
        self.probe.apply_pair(shift, propagators, len);
        self.epoch += duration;
        Ok(())
    }

    /// Moves probe amplitude from excited mode `from` to `to`. A fraction
    /// `efficiency` of the amplitude is relabelled; the rest stays in place
    /// with the norm preserved.
    pub fn shelve(&mut self, from: i32, to: i32, efficiency: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(Error::Config(format!("transfer efficiency {efficiency} not in [0, 1]")));
        }
        let Some(src) = self.probe.excited.remove(&from) else {
            return Ok(());
        };
        let keep = (1.0 - efficiency * efficiency).sqrt();
        let moved: Vec<C64> = src.iter().map(|a| a * efficiency).collect();
        let dst = self
            .probe
            .excited
            .entry(to)
            .or_insert_with(|| vec![C64::new(0.0, 0.0); src.len()]);
        for (d, m) in dst.iter_mut().zip(&moved) {
            *d += m;
        }
        if keep > 0.0 {
            self.probe.excited.insert(from, src.iter().map(|a| a * keep).collect());
        }
        Ok(())
    }

    /// First-order polarization `𝓟_k(ζ) = ∫ Σ_n (α_n^{(0)*} β_{n+k}^{(1)} + α_n^{(1)*} β_{n+k}^{(0)}) g dΔ`
    /// at the current epoch, one value per ζ node.
    pub fn probe_polarization(&self, order: i32, grid: &SimGrid, line: &LineShape) -> Result<Vec<C64>> {
        self.check_grid(grid)?;
        let mut out = vec![C64::new(0.0, 0.0); self.n_zeta];
        let terms = [(&self.background, &self.probe), (&self.probe, &self.background)];
        for (gl, el) in terms {
            for (&n, a) in &gl.ground {
                if let Some(b) = el.excited.get(&(n + order)) {
                    accumulate(&mut out, a, b, grid, line, self.n_delta);
                }
            }
        }
        Ok(out)
    }

    /// Zeroth-order polarization of the background layer.
    pub fn background_polarization(&self, order: i32, grid: &SimGrid, line: &LineShape) -> Result<Vec<C64>> {
        self.check_grid(grid)?;
        let mut out = vec![C64::new(0.0, 0.0); self.n_zeta];
        for (&n, a) in &self.background.ground {
            if let Some(b) = self.background.excited.get(&(n + order)) {
                accumulate(&mut out, a, b, grid, line, self.n_delta);
            }
        }
        Ok(out)
    }

    /// Fourier orders `m - n` that can carry first-order polarization.
    pub fn probe_orders(&self) -> Vec<i32> {
        let mut out = BTreeSet::new();
        for (gl, el) in [(&self.background, &self.probe), (&self.probe, &self.background)] {
            for &n in gl.ground.keys() {
                for &m in el.excited.keys() {
                    out.insert(m - n);
                }
            }
        }
        out.into_iter().collect()
    }

    /// Largest per-atom `Σ|amplitude|²` of the background layer. The probe
    /// layer is first order and carries no norm of its own.
    pub fn max_norm(&self) -> f64 {
        let mut norms = vec![0.0; self.len()];
        for amps in self.background.ground.values().chain(self.background.excited.values()) {
            for (s, a) in norms.iter_mut().zip(amps) {
                *s += a.norm_sqr();
            }
        }
        norms.into_iter().fold(0.0, f64::max)
    }

    pub fn check_norm(&self) -> Result<()> {
        let n = self.max_norm();
        if (n - 1.0).abs() > 1e-6 {
            return Err(Error::Numerical(format!("background norm {n} differs from 1")));
        }
        Ok(())
    }
}

fn accumulate(out: &mut [C64], a: &[C64], b: &[C64], grid: &SimGrid, line: &LineShape, n_delta: usize) {
    for (j, o) in out.iter_mut().enumerate() {
        let base = j * n_delta;
        let mut s = C64::new(0.0, 0.0);
        for i in 0..n_delta {
            let wg = grid.weights[i] * line.density(grid.delta[i]);
            s += a[base + i].conj() * b[base + i] * wg;
        }
        *o += s;
    }
}
