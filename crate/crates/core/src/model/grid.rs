use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::line::{LineKind, LineShape};
use crate::error::{Error, Result};

/// Largest accepted `dt · max(|Ω|, |δ(t)|, |Δ|_max)`.
pub const RESOLUTION_LIMIT: f64 = 0.1;

/// Δ quadrature nodes and weights, the optical-depth axis and the time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimGrid {
    pub delta: Vec<f64>,
    pub weights: Vec<f64>,
    /// Uniformly spaced ζ = α_d·z nodes starting at 0.
    pub zeta: Vec<f64>,
    pub dt: f64,
}

impl SimGrid {
    /// Builds the grid for `line`: trapezoid nodes for a flat line, Gauss-Legendre
    /// nodes for a Gaussian one.
    pub fn new(line: &LineShape, n_delta: usize, zeta_len: f64, zeta_step: f64, dt: f64) -> Result<Self> {
        line.validate()?;
        let (delta, weights) = match line.kind {
            LineKind::Flat => trapezoid_nodes(line.delta_cutoff, n_delta)?,
            LineKind::Gaussian => gauss_legendre_nodes(line.delta_cutoff, n_delta)?,
        };
        let grid = SimGrid {
            delta,
            weights,
            zeta: zeta_nodes(zeta_len, zeta_step)?,
            dt,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Same as [`SimGrid::new`] but with the node count derived from a target spacing.
    pub fn with_delta_step(line: &LineShape, delta_step: f64, zeta_len: f64, zeta_step: f64, dt: f64) -> Result<Self> {
        if !(delta_step > 0.0) {
            return Err(Error::Config(format!("delta_step must be > 0, got {delta_step}")));
        }
        let n = (2.0 * line.delta_cutoff / delta_step - 1e-9).ceil() as usize + 1;
        Self::new(line, n, zeta_len, zeta_step, dt)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta.is_empty() || self.delta.len() != self.weights.len() {
            return Err(Error::Config("Δ nodes and weights must be nonempty and of equal length".into()));
        }
        if self.weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Config("quadrature weights must be positive".into()));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.zeta.is_empty() || self.zeta[0] != 0.0 {
            return Err(Error::Config("ζ nodes must start at 0".into()));
        }
        if self.zeta.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("ζ nodes must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn n_delta(&self) -> usize {
        self.delta.len()
    }

    pub fn n_zeta(&self) -> usize {
        self.zeta.len()
    }

    pub fn zeta_len(&self) -> f64 {
        *self.zeta.last().unwrap()
    }

    pub fn zeta_step(&self) -> f64 {
        if self.zeta.len() < 2 {
            0.0
        } else {
            self.zeta[1] - self.zeta[0]
        }
    }

    pub fn delta_max(&self) -> f64 {
        self.delta.iter().fold(0.0f64, |m, d| m.max(d.abs()))
    }

    /// Rejects `dt` when `dt · max(|Ω|, |δ|, |Δ|_max)` exceeds the limit.
    /// `max_phase_rate` bounds `|dφ/dt|` so that `|δ| ≤ max_phase_rate + |Δ|_max`.
    pub fn check_resolution(&self, dt: f64, max_rabi: f64, max_phase_rate: f64) -> Result<()> {
        let rate = max_rate(max_rabi, max_phase_rate, self.delta_max());
        if dt * rate > RESOLUTION_LIMIT * (1.0 + 1e-9) {
            return Err(Error::Config(format!(
                "resolution guard violated: dt·rate = {:.4} > {RESOLUTION_LIMIT} (dt = {dt}, rate = {rate})",
                dt * rate
            )));
        }
        Ok(())
    }

    /// Largest time step satisfying the resolution guard.
    pub fn guard_dt(&self, max_rabi: f64, max_phase_rate: f64) -> f64 {
        RESOLUTION_LIMIT / max_rate(max_rabi, max_phase_rate, self.delta_max())
    }

    /// Same grid restricted to the first `n` ζ nodes.
    pub fn truncated(&self, n: usize) -> SimGrid {
        SimGrid {
            zeta: self.zeta[..n].to_vec(),
            ..self.clone()
        }
    }
}

fn max_rate(max_rabi: f64, max_phase_rate: f64, delta_max: f64) -> f64 {
    max_rabi.abs().max(max_phase_rate.abs() + delta_max).max(delta_max)
}

/// Uniform time samples covering `[a, b]` with spacing at most `dt_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn covering(a: f64, b: f64, dt_max: f64) -> Self {
        assert!(b > a && dt_max > 0.0);
        let n = ((b - a) / dt_max - 1e-9).ceil() as usize + 1;
        TimeGrid {
            t_start: a,
            dt: (b - a) / (n - 1) as f64,
            n,
        }
    }

    pub fn t(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.n - 1)
    }

    pub fn duration(&self) -> f64 {
        self.dt * (self.n - 1) as f64
    }
}

pub fn zeta_nodes(zeta_len: f64, zeta_step: f64) -> Result<Vec<f64>> {
    if !(zeta_len >= 0.0) || !zeta_len.is_finite() {
        return Err(Error::Config(format!("optical length must be >= 0, got {zeta_len}")));
    }
    if zeta_len == 0.0 {
        return Ok(vec![0.0]);
    }
    if !(zeta_step > 0.0) {
        return Err(Error::Config(format!("zeta_step must be > 0, got {zeta_step}")));
    }
    let n = ((zeta_len / zeta_step).round() as usize).max(1);
    let h = zeta_len / n as f64;
    Ok((0..=n).map(|j| j as f64 * h).collect())
}

/// Uniform trapezoid nodes on `[-c, c]`; the weights sum to `2c`.
pub fn trapezoid_nodes(cutoff: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 2 {
        return Err(Error::Config("trapezoid quadrature needs at least 2 nodes".into()));
    }
    let h = 2.0 * cutoff / (n - 1) as f64;
    let nodes = (0..n).map(|i| -cutoff + i as f64 * h).collect();
    let mut w = vec![h; n];
    w[0] *= 0.5;
    w[n - 1] *= 0.5;
    Ok((nodes, w))
}

/// Gauss-Legendre nodes mapped onto `[-c, c]`.
pub fn gauss_legendre_nodes(cutoff: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 1 {
        return Err(Error::Config("Gauss-Legendre quadrature needs at least 1 node".into()));
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    Ok((
        x.into_iter().map(|v| v * cutoff).collect(),
        w.into_iter().map(|v| v * cutoff).collect(),
    ))
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
