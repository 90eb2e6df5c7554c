//! Adiabatic-following approximation of a chirped control pulse.
//!
//! With `Ω = A e^{-iΦ}` the rotating-frame Hamiltonian is
//! `[[0, A/2], [A/2, δ]]`, `δ = dΦ/dt − Δ`. Neglecting `dθ/dt`, each
//! instantaneous eigenvector only picks up the phase `Λ± = ∫λ± dt`.

use num_complex::Complex64 as C64;

use super::propagator::Propagator2;
use crate::error::{Error, Result};
use crate::model::TimeSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticDecomposition {
    /// `A(t) = |Ω(t)|`.
    pub amplitude: Vec<f64>,
    /// Unwrapped `Φ(t) = −arg Ω(t)`.
    pub phase: Vec<f64>,
    /// `δ(t) = dΦ/dt − Δ`.
    pub detuning: Vec<f64>,
    /// `√(A² + δ²)`.
    pub r_gen: Vec<f64>,
    pub sin_theta: Vec<f64>,
    pub cos_theta: Vec<f64>,
    pub lambda_plus: Vec<f64>,
    pub lambda_minus: Vec<f64>,
    pub big_lambda_plus: f64,
    pub big_lambda_minus: f64,
}

/// Sign pattern of `δ` across the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    /// `δ` rises from negative to positive.
    Positive,
    /// `δ` falls from positive to negative.
    Negative,
}

impl AdiabaticDecomposition {
    pub fn new(field: &TimeSeries, delta: f64) -> Self {
        let n = field.samples.len();
        let dt = field.time.dt;
        let amplitude: Vec<f64> = field.samples.iter().map(|z| z.norm()).collect();
        let mut phase = Vec::with_capacity(n);
        let mut acc = 0.0;
        for (k, z) in field.samples.iter().enumerate() {
            if k == 0 {
                acc = -z.arg();
            } else {
                acc -= (field.samples[k - 1].conj() * z).arg();
            }
            phase.push(acc);
        }
        let detuning: Vec<f64> = (0..n)
            .map(|k| {
                let rate = if n < 2 {
                    0.0
                } else if k == 0 {
                    (phase[1] - phase[0]) / dt
                } else if k == n - 1 {
                    (phase[n - 1] - phase[n - 2]) / dt
                } else {
                    (phase[k + 1] - phase[k - 1]) / (2.0 * dt)
                };
                rate - delta
            })
            .collect();
        let r_gen: Vec<f64> = amplitude.iter().zip(&detuning).map(|(a, d)| a.hypot(*d)).collect();
        let mut sin_theta = Vec::with_capacity(n);
        let mut cos_theta = Vec::with_capacity(n);
        for ((a, d), r) in amplitude.iter().zip(&detuning).zip(&r_gen) {
            let x = r - d;
            let norm = x.hypot(*a);
            if norm == 0.0 {
                // A = 0 and δ ≥ 0: the upper eigenvector is the excited state.
                sin_theta.push(1.0);
                cos_theta.push(0.0);
            } else {
                sin_theta.push(a / norm);
                cos_theta.push(x / norm);
            }
        }
        let lambda_plus: Vec<f64> = detuning.iter().zip(&r_gen).map(|(d, r)| 0.5 * (d + r)).collect();
        let lambda_minus: Vec<f64> = detuning.iter().zip(&r_gen).map(|(d, r)| 0.5 * (d - r)).collect();
        let big_lambda_plus = trapezoid(&lambda_plus, dt);
        let big_lambda_minus = trapezoid(&lambda_minus, dt);
        AdiabaticDecomposition {
            amplitude,
            phase,
            detuning,
            r_gen,
            sin_theta,
            cos_theta,
            lambda_plus,
            lambda_minus,
            big_lambda_plus,
            big_lambda_minus,
        }
    }

    pub fn modulation(&self) -> Option<Modulation> {
        let (s, e) = (*self.detuning.first()?, *self.detuning.last()?);
        if s < 0.0 && e > 0.0 {
            Some(Modulation::Positive)
        } else if s > 0.0 && e < 0.0 {
            Some(Modulation::Negative)
        } else {
            None
        }
    }

    /// Anti-diagonal propagator under perfect adiabatic following.
    pub fn propagator(&self) -> Result<Propagator2> {
        let modulation = self.modulation().ok_or_else(|| {
            Error::Domain(format!(
                "instantaneous detuning does not change sign across the window (δ from {:.3} to {:.3})",
                self.detuning.first().copied().unwrap_or(f64::NAN),
                self.detuning.last().copied().unwrap_or(f64::NAN)
            ))
        })?;
        let phi_s = self.phase[0];
        let phi_e = *self.phase.last().unwrap();
        let (lp, lm) = (self.big_lambda_plus, self.big_lambda_minus);
        let zero = C64::new(0.0, 0.0);
        let m = match modulation {
            Modulation::Positive => [
                [zero, -C64::from_polar(1.0, lm + phi_s)],
                [C64::from_polar(1.0, lp - phi_e), zero],
            ],
            Modulation::Negative => [
                [zero, C64::from_polar(1.0, lp + phi_s)],
                [-C64::from_polar(1.0, lm - phi_e), zero],
            ],
        };
        Ok(Propagator2::new(m))
    }
}

fn trapezoid(y: &[f64], dt: f64) -> f64 {
    match y.len() {
        0 | 1 => 0.0,
        n => dt * (y.iter().sum::<f64>() - 0.5 * (y[0] + y[n - 1])),
    }
}

/// Adiabatic propagator for either sweep direction; a domain error when the
/// instantaneous detuning keeps its sign (no passage through resonance).
pub fn adiabatic_propagator(field: &TimeSeries, delta: f64) -> Result<Propagator2> {
    AdiabaticDecomposition::new(field, delta).propagator()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::atom::integrator::control_propagator;
    use crate::atom::propagator::rephasing_factor;
    use crate::model::{pulse::sample_envelope, PulseSpec, TimeGrid};

    fn series(spec: &PulseSpec, dt: f64) -> TimeSeries {
        let (a, b) = spec.window();
        let tg = TimeGrid::covering(a, b, dt);
        TimeSeries::new(tg, sample_envelope(spec, tg.t_start, tg.dt, tg.n))
    }

    fn chirp_pulse() -> TimeSeries {
        series(&PulseSpec::sech_chirp(10.0, 1.0, -20.0), 0.0015)
    }

    #[test]
    fn structure_is_antidiagonal_unimodular() {
        let ts = chirp_pulse();
        for delta in [-15.0, 0.0, 7.0] {
            let u = adiabatic_propagator(&ts, delta).unwrap();
            assert_eq!(u.m[0][0], C64::new(0.0, 0.0));
            assert_eq!(u.m[1][1], C64::new(0.0, 0.0));
            assert!((u.m[0][1].norm() - 1.0).abs() < 1e-14);
            assert!((u.m[1][0].norm() - 1.0).abs() < 1e-14);
            assert!((rephasing_factor(&u).norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn decomposition_invariants() {
        let d = AdiabaticDecomposition::new(&chirp_pulse(), 3.0);
        for k in 0..d.r_gen.len() {
            assert!(d.lambda_plus[k] >= d.lambda_minus[k]);
            let s = d.sin_theta[k].powi(2) + d.cos_theta[k].powi(2);
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!(d.big_lambda_plus - d.big_lambda_minus > 0.0);
        assert_eq!(d.modulation(), Some(Modulation::Negative));
    }

    #[test]
    fn unchirped_lambda_split_is_pulse_area() {
        let spec = PulseSpec::sech_chirp(2.0, 1.0, 0.0).with_window(20.0);
        let d = AdiabaticDecomposition::new(&series(&spec, 0.001), 0.0);
        let area = PI * 2.0 * 1.0;
        assert!((d.big_lambda_plus - d.big_lambda_minus - area).abs() < 1e-4);
    }

    #[test]
    fn outside_sweep_is_domain_error() {
        assert!(matches!(adiabatic_propagator(&chirp_pulse(), 30.0), Err(Error::Domain(_))));
    }

    #[test]
    fn off_diagonal_phases_agree_in_ap_regime() {
        let ts = chirp_pulse();
        for delta in [-15.0, -8.0, 0.0, 5.0, 15.0] {
            let a = adiabatic_propagator(&ts, delta).unwrap();
            let n = control_propagator(&ts, delta).unwrap();
            for (i, j) in [(0, 1), (1, 0)] {
                let diff = (a.m[i][j] * n.m[i][j].conj()).arg().abs();
                assert!(diff < 0.1, "Δ={delta} U{i}{j}: {diff}");
            }
        }
    }

    #[test]
    fn rephasing_factor_converges_in_adiabatic_limit() {
        // Stretching the pulse at fixed peak Rabi frequency and sweep range
        // shrinks the nonadiabatic residual roughly as 1/τ.
        let gap = |tau: f64| {
            let ts = series(&PulseSpec::sech_chirp(10.0, tau, -20.0 * tau), 0.002);
            let a = rephasing_factor(&adiabatic_propagator(&ts, 0.0).unwrap());
            let n = rephasing_factor(&control_propagator(&ts, 0.0).unwrap());
            (a - n).norm()
        };
        let (g2, g4) = (gap(2.0), gap(4.0));
        assert!(g4 < 0.05, "{g4}");
        assert!(g4 < 0.6 * g2, "{g4} vs {g2}");
    }

    #[test]
    fn positive_chirp_mirrors() {
        let ts = series(&PulseSpec::sech_chirp(10.0, 1.0, 20.0), 0.0015);
        let d = AdiabaticDecomposition::new(&ts, 0.0);
        assert_eq!(d.modulation(), Some(Modulation::Positive));
        let a = d.propagator().unwrap();
        let n = control_propagator(&ts, 0.0).unwrap();
        for (i, j) in [(0, 1), (1, 0)] {
            assert!((a.m[i][j] * n.m[i][j].conj()).arg().abs() < 0.1);
        }
    }
}
