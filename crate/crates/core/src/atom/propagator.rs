use num_complex::Complex64 as C64;

use crate::error::Result;
use crate::model::Schedule;

/// 2×2 complex matrix acting on the amplitude pair `(α, β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator2 {
    pub m: [[C64; 2]; 2],
}

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

impl Propagator2 {
    pub const IDENTITY: Propagator2 = Propagator2 { m: [[ONE, ZERO], [ZERO, ONE]] };

    pub fn new(m: [[C64; 2]; 2]) -> Self {
        Propagator2 { m }
    }

    /// Builds the matrix whose columns are the images of `(1,0)` and `(0,1)`.
    pub fn from_columns(c0: [C64; 2], c1: [C64; 2]) -> Self {
        Propagator2 {
            m: [[c0[0], c1[0]], [c0[1], c1[1]]],
        }
    }

    #[inline]
    pub fn apply(&self, x: C64, y: C64) -> (C64, C64) {
        (
            self.m[0][0] * x + self.m[0][1] * y,
            self.m[1][0] * x + self.m[1][1] * y,
        )
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Propagator2) -> Propagator2 {
        let a = &self.m;
        let b = &rhs.m;
        let mut m = [[ZERO; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Propagator2 { m }
    }

    pub fn dagger(&self) -> Propagator2 {
        let a = &self.m;
        Propagator2 {
            m: [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]],
        }
    }

    /// `‖U†U − I‖_max`.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.dagger().mul(self);
        let mut e = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { ONE } else { ZERO };
                e = e.max((p.m[i][j] - target).norm());
            }
        }
        e
    }

    /// Largest entrywise distance to `other`.
    pub fn max_diff(&self, other: &Propagator2) -> f64 {
        let mut e = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                e = e.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        e
    }
}

/// Field-free evolution `diag(1, e^{-iΔ·duration})`.
pub fn free_propagator(delta: f64, duration: f64) -> Propagator2 {
    Propagator2::new([[ONE, ZERO], [ZERO, C64::from_polar(1.0, -delta * duration)]])
}

/// Full-sequence propagator `U_F3 · U_C2 · U_F2 · U_C1 · U_F1` from the end of
/// the signal window to the start of the echo window.
pub fn total_propagator(u_c1: &Propagator2, u_c2: &Propagator2, delta: f64, schedule: &Schedule) -> Result<Propagator2> {
    schedule.check_windows()?;
    let [f1, f2, f3] = schedule.free_intervals();
    Ok(free_propagator(delta, f3)
        .mul(u_c2)
        .mul(&free_propagator(delta, f2))
        .mul(u_c1)
        .mul(&free_propagator(delta, f1)))
}

/// `𝓡 = U₁₂ · conj(U₂₁)`.
pub fn rephasing_factor(u: &Propagator2) -> C64 {
    u.m[0][1] * u.m[1][0].conj()
}

/// Population left in the excited state, `|U₂₁|²`.
pub fn remanent_excitation(u_total: &Propagator2) -> f64 {
    u_total.m[1][0].norm_sqr().min(1.0)
}

/// `|U₂₁|²` of `U_C2 · F · U_C1` averaged over the free phase of `F`: the
/// slow envelope under the fast oscillation in Δ set by the pulse spacing.
pub fn excitation_envelope(u_c1: &Propagator2, u_c2: &Propagator2) -> f64 {
    (u_c2.m[1][0] * u_c1.m[0][0]).norm_sqr() + (u_c2.m[1][1] * u_c1.m[1][0]).norm_sqr()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn flip() -> Propagator2 {
        Propagator2::new([[ZERO, c(0.0, 1.0)], [c(0.0, 1.0), ZERO]])
    }

    #[test]
    fn free_examples() {
        assert_eq!(free_propagator(3.0, 0.0), Propagator2::IDENTITY);
        let u = free_propagator(PI, 1.0);
        assert!((u.m[1][1] - c(-1.0, 0.0)).norm() < 1e-15);
        let u = free_propagator(2.0, 3.0);
        assert!((u.m[1][1].arg() - (-6.0 + 2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn rephasing_examples() {
        assert!((rephasing_factor(&flip()) - ONE).norm() < 1e-15);
        assert_eq!(rephasing_factor(&Propagator2::IDENTITY), ZERO);
    }

    #[test]
    fn remanent_examples() {
        assert_eq!(remanent_excitation(&Propagator2::IDENTITY), 0.0);
        assert!(remanent_excitation(&flip().mul(&flip())) < 1e-30);
    }

    #[test]
    fn total_of_identities_is_identity_at_resonance() {
        let s = Schedule::packed(0.0, 5.0, 10.0, 1.0);
        let u = total_propagator(&Propagator2::IDENTITY, &Propagator2::IDENTITY, 0.0, &s).unwrap();
        assert!(u.max_diff(&Propagator2::IDENTITY) < 1e-15);
    }

    #[test]
    fn total_with_zero_gaps_matches_hand_product() {
        // Zero-length free segments: windows touch exactly.
        let s = Schedule {
            t0: 0.0,
            t1: 2.0,
            t2: 4.0,
            t3: 6.0,
            signal_half: 1.0,
            control_half: 1.0,
        };
        let a = Propagator2::new([[ZERO, c(0.0, 1.0)], [c(0.0, 1.0), ZERO]]);
        let b = Propagator2::new([[ZERO, c(-1.0, 0.0)], [c(1.0, 0.0), ZERO]]);
        let u = total_propagator(&a, &b, 7.0, &s).unwrap();
        // b·a = [[0,-1],[1,0]]·[[0,i],[i,0]] = [[-i,0],[0,i]]
        assert!((u.m[0][0] - c(0.0, -1.0)).norm() < 1e-15);
        assert!((u.m[1][1] - c(0.0, 1.0)).norm() < 1e-15);
        assert!(u.m[0][1].norm() < 1e-15 && u.m[1][0].norm() < 1e-15);
    }

    #[test]
    fn total_rejects_overlap() {
        let mut s = Schedule::packed(0.0, 5.0, 10.0, 1.0);
        s.t2 = s.t1 + 5.0;
        let r = total_propagator(&Propagator2::IDENTITY, &Propagator2::IDENTITY, 0.0, &s);
        assert!(matches!(r, Err(crate::error::Error::Schedule(_))));
    }

    #[test]
    fn envelope_is_phase_average_of_total() {
        // partial rotations so that both paths contribute
        let rot = |a: f64, p: f64| {
            Propagator2::new([
                [c(a.cos(), 0.0), C64::from_polar(a.sin(), p)],
                [-C64::from_polar(a.sin(), -p), c(a.cos(), 0.0)],
            ])
        };
        let (u1, u2) = (rot(1.1, 0.3), rot(0.7, -1.2));
        let n = 64;
        let mean: f64 = (0..n)
            .map(|k| {
                let f = free_propagator(1.0, 2.0 * PI * k as f64 / n as f64);
                remanent_excitation(&u2.mul(&f).mul(&u1))
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - excitation_envelope(&u1, &u2)).abs() < 1e-14);
    }

    #[test]
    fn unitarity_measure() {
        assert!(flip().unitarity_error() < 1e-15);
        let bad = Propagator2::new([[c(1.1, 0.0), ZERO], [ZERO, ONE]]);
        assert!((bad.unitarity_error() - 0.21).abs() < 1e-12);
    }
}
