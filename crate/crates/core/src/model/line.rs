use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineKind {
    Flat,
    Gaussian,
}

/// Inhomogeneous line shape `g(Δ)` truncated to `|Δ| ≤ delta_cutoff`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineShape {
    pub kind: LineKind,
    /// Gaussian width σ_Δ (rad/µs); unused for a flat line.
    pub sigma_delta: f64,
    pub delta_cutoff: f64,
}

impl LineShape {
    /// Flat line normalized over the truncation range, `g₀ = 1/(2·cutoff)`.
    pub fn flat(delta_cutoff: f64) -> Self {
        LineShape {
            kind: LineKind::Flat,
            sigma_delta: 0.0,
            delta_cutoff,
        }
    }

    /// Gaussian line truncated at `6σ`.
    pub fn gaussian(sigma_delta: f64) -> Self {
        LineShape {
            kind: LineKind::Gaussian,
            sigma_delta,
            delta_cutoff: 6.0 * sigma_delta,
        }
    }

    /// Flat-line cutoff covering the chirp span plus transform-limited wings:
    /// `2·(|μ|/τ + 3/τ)`.
    pub fn default_flat_cutoff(mu: f64, tau: f64) -> f64 {
        2.0 * (mu.abs() / tau + 3.0 / tau)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_cutoff > 0.0) || !self.delta_cutoff.is_finite() {
            return Err(Error::Config(format!(
                "line delta_cutoff must be > 0, got {}",
                self.delta_cutoff
            )));
        }
        if self.kind == LineKind::Gaussian && !(self.sigma_delta > 0.0) {
            return Err(Error::Config(format!(
                "gaussian line needs sigma_delta > 0, got {}",
                self.sigma_delta
            )));
        }
        Ok(())
    }

    /// Unchecked density; callers guarantee `|delta| ≤ cutoff`.
    pub fn density(&self, delta: f64) -> f64 {
        match self.kind {
            LineKind::Flat => 0.5 / self.delta_cutoff,
            LineKind::Gaussian => {
                let s = self.sigma_delta;
                (-0.5 * delta * delta / (s * s)).exp() / (s * (2.0 * PI).sqrt())
            }
        }
    }

    pub fn center_density(&self) -> f64 {
        self.density(0.0)
    }

    /// Coupling constant `κ = 1/(π g(0))` in `∂Ω/∂ζ = iκ𝓟`.
    pub fn kappa(&self) -> f64 {
        1.0 / (PI * self.center_density())
    }
}

/// `g(Δ)`, rejecting queries outside the truncation range.
pub fn line_weight(shape: &LineShape, delta: f64) -> Result<f64> {
    if !(delta.abs() <= shape.delta_cutoff * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!(
            "Δ = {delta} lies outside the line cutoff ±{}",
            shape.delta_cutoff
        )));
    }
    Ok(shape.density(delta))
}
