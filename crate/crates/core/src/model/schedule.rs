use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interaction timeline: signal centred at `t0`, controls at `t1` and `t2`,
/// echo at `t3`. The signal and echo occupy `[t ± signal_half]`, the controls
/// `[t ± control_half]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub signal_half: f64,
    pub control_half: f64,
}

impl Schedule {
    /// Shortest timeline that satisfies the rephasing condition with every
    /// window separated by at least `margin`: `t1 - t0 = T + T' + margin`,
    /// `t2 - t1 = 2(t1 - t0)`.
    pub fn packed(t0: f64, signal_half: f64, control_half: f64, margin: f64) -> Self {
        let t1 = t0 + signal_half + control_half + margin;
        let t2 = t1 + 2.0 * (t1 - t0);
        let t3 = 2.0 * t2 - 2.0 * t1 + t0;
        Schedule {
            t0,
            t1,
            t2,
            t3,
            signal_half,
            control_half,
        }
    }

    /// `2t₂ − 2t₁ + t₀ − t₃`; zero when the echo lands on the rephasing time.
    pub fn rephasing_mismatch(&self) -> f64 {
        2.0 * self.t2 - 2.0 * self.t1 + self.t0 - self.t3
    }

    /// Checks that no two windows overlap.
    pub fn check_windows(&self) -> Result<()> {
        let (t, tp) = (self.signal_half, self.control_half);
        if !(t > 0.0 && tp > 0.0) {
            return Err(Error::Schedule("window half-widths must be positive".into()));
        }
        let eps = 1e-9 * (1.0 + self.t3.abs());
        if self.t0 + t > self.t1 - tp + eps {
            return Err(Error::Schedule(format!(
                "signal window [{}, {}] overlaps first control window starting at {}",
                self.t0 - t,
                self.t0 + t,
                self.t1 - tp
            )));
        }
        if self.t1 + tp > self.t2 - tp + eps {
            return Err(Error::Schedule(format!(
                "control windows overlap: first ends at {}, second starts at {}",
                self.t1 + tp,
                self.t2 - tp
            )));
        }
        if self.t2 + tp > self.t3 - t + eps {
            return Err(Error::Schedule(format!(
                "second control window ends at {} after the echo window starts at {}",
                self.t2 + tp,
                self.t3 - t
            )));
        }
        Ok(())
    }

    /// Window check plus the rephasing condition within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        self.check_windows()?;
        let m = self.rephasing_mismatch();
        if m.abs() > tol {
            return Err(Error::Schedule(format!(
                "rephasing condition violated: 2t2 - 2t1 + t0 - t3 = {m} (tolerance {tol})"
            )));
        }
        Ok(())
    }

    /// Free intervals `[t0+T, t1-T']`, `[t1+T', t2-T']`, `[t2+T', t3-T]`.
    pub fn free_intervals(&self) -> [f64; 3] {
        let (t, tp) = (self.signal_half, self.control_half);
        [
            self.t1 - tp - (self.t0 + t),
            self.t2 - tp - (self.t1 + tp),
            self.t3 - t - (self.t2 + tp),
        ]
    }

    /// Nominal primary-echo instant `2t₁ − t₀`.
    pub fn primary_echo_time(&self) -> f64 {
        2.0 * self.t1 - self.t0
    }
}
