use num_complex::Complex64 as C64;

use super::grid::TimeGrid;
use super::pulse::Direction;
use crate::error::{Error, Result};

/// Threshold for the temporal-separation check at window edges.
pub const EDGE_RATIO_LIMIT: f64 = 1e-3;

/// Complex envelope sampled on a uniform time grid at a single position.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub time: TimeGrid,
    pub samples: Vec<C64>,
}

impl TimeSeries {
    pub fn new(time: TimeGrid, samples: Vec<C64>) -> Self {
        assert_eq!(time.n, samples.len());
        TimeSeries { time, samples }
    }

    /// `∫|Ω|² dt` by the trapezoid rule.
    pub fn energy(&self) -> f64 {
        trapezoid_energy(&self.samples, self.time.dt)
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn scaled(&self, c: C64) -> TimeSeries {
        TimeSeries {
            time: self.time,
            samples: self.samples.iter().map(|z| z * c).collect(),
        }
    }

    pub fn shifted(&self, dt: f64) -> TimeSeries {
        let mut time = self.time;
        time.t_start += dt;
        TimeSeries {
            time,
            samples: self.samples.clone(),
        }
    }
}

pub(crate) fn trapezoid_energy(samples: &[C64], dt: f64) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = samples.iter().map(|z| z.norm_sqr()).sum();
    dt * (inner - 0.5 * (samples[0].norm_sqr() + samples[n - 1].norm_sqr()))
}

/// Slowly varying Rabi-frequency envelope `Ω(ζ, t)` of one propagation direction.
/// `samples[j]` holds the time trace at physical node `zeta[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldEnvelope {
    pub direction: Direction,
    pub zeta: Vec<f64>,
    pub time: TimeGrid,
    pub samples: Vec<Vec<C64>>,
}

impl FieldEnvelope {
    pub fn zeros(direction: Direction, zeta: Vec<f64>, time: TimeGrid) -> Self {
        let samples = vec![vec![C64::new(0.0, 0.0); time.n]; zeta.len()];
        FieldEnvelope {
            direction,
            zeta,
            time,
            samples,
        }
    }

    /// Physical index of the face the field enters through.
    pub fn entry_index(&self) -> usize {
        match self.direction {
            Direction::Forward => 0,
            Direction::Backward => self.zeta.len() - 1,
        }
    }

    pub fn exit_index(&self) -> usize {
        match self.direction {
            Direction::Forward => self.zeta.len() - 1,
            Direction::Backward => 0,
        }
    }

    pub fn trace(&self, j: usize) -> TimeSeries {
        TimeSeries::new(self.time, self.samples[j].clone())
    }

    pub fn entry(&self) -> TimeSeries {
        self.trace(self.entry_index())
    }

    pub fn exit(&self) -> TimeSeries {
        self.trace(self.exit_index())
    }

    pub fn energy(&self, j: usize) -> f64 {
        trapezoid_energy(&self.samples[j], self.time.dt)
    }

    /// Largest edge amplitude relative to the trace maximum at node `j`.
    pub fn edge_ratio(&self, j: usize) -> f64 {
        let s = &self.samples[j];
        let peak = s.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if peak == 0.0 {
            return 0.0;
        }
        s[0].norm().max(s[s.len() - 1].norm()) / peak
    }

    /// Worst edge ratio over all nodes.
    pub fn max_edge_ratio(&self) -> f64 {
        (0..self.zeta.len()).fold(0.0, |m, j| m.max(self.edge_ratio(j)))
    }

    /// Temporal-separation check: the field must have decayed at both window edges.
    pub fn check_separation(&self) -> Result<()> {
        let r = self.max_edge_ratio();
        if r > EDGE_RATIO_LIMIT {
            return Err(Error::Config(format!(
                "field not temporally separated: edge/peak = {r:.3e} exceeds {EDGE_RATIO_LIMIT:e}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_of_constant_trace() {
        let tg = TimeGrid::covering(0.0, 2.0, 0.01);
        let ts = TimeSeries::new(tg, vec![C64::new(0.0, 3.0); tg.n]);
        assert!((ts.energy() - 18.0).abs() < 1e-10);
    }

    #[test]
    fn faces_follow_direction() {
        let tg = TimeGrid::covering(0.0, 1.0, 0.5);
        let f = FieldEnvelope::zeros(Direction::Backward, vec![0.0, 0.5, 1.0], tg);
        assert_eq!(f.entry_index(), 2);
        assert_eq!(f.exit_index(), 0);
    }

    #[test]
    fn separation_check() {
        let tg = TimeGrid::covering(-1.0, 1.0, 0.5);
        let mut f = FieldEnvelope::zeros(Direction::Forward, vec![0.0], tg);
        f.samples[0] = vec![0.0, 0.5, 1.0, 0.5, 0.0].into_iter().map(|x| C64::new(x, 0.0)).collect();
        assert!(f.check_separation().is_ok());
        f.samples[0][4] = C64::new(0.01, 0.0);
        assert!(f.check_separation().is_err());
    }
}
