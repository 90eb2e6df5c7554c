use std::io::Write;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::integrator::{control_propagator, StepTable};
use super::propagator::{rephasing_factor, Propagator2};
use crate::contour::{marching_squares, Segment};
use crate::error::{Error, Result};
use crate::format::fmt_g;
use crate::model::FieldEnvelope;

/// Default magnitude level marking the adiabatic-passage region.
pub const AP_LEVEL: f64 = 0.98;

/// Rephasing factors of both control pulses on a `(Δ, ζ)` grid, laid out `[ζ][Δ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RephasingMap {
    pub delta: Vec<f64>,
    pub zeta: Vec<f64>,
    pub r1: Vec<C64>,
    pub r2: Vec<C64>,
}

impl RephasingMap {
    pub fn from_propagators(delta: Vec<f64>, zeta: Vec<f64>, u1: &[Propagator2], u2: &[Propagator2]) -> Result<Self> {
        let n = delta.len() * zeta.len();
        if u1.len() != n || u2.len() != n {
            return Err(Error::Config(format!(
                "propagator grids ({}, {}) do not match {}×{} nodes",
                u1.len(),
                u2.len(),
                zeta.len(),
                delta.len()
            )));
        }
        Ok(RephasingMap {
            r1: u1.iter().map(rephasing_factor).collect(),
            r2: u2.iter().map(rephasing_factor).collect(),
            delta,
            zeta,
        })
    }

    pub fn product(&self, iz: usize, id: usize) -> C64 {
        let k = iz * self.delta.len() + id;
        self.r1[k] * self.r2[k].conj()
    }

    /// `|𝓡₁ 𝓡₂*|` as rows over ζ.
    pub fn magnitude(&self) -> Vec<Vec<f64>> {
        (0..self.zeta.len())
            .map(|iz| (0..self.delta.len()).map(|id| self.product(iz, id).norm()).collect())
            .collect()
    }

    pub fn contour(&self, level: f64) -> Vec<Segment> {
        marching_squares(&self.delta, &self.zeta, &self.magnitude(), level)
    }

    /// Depth at which the smallest `|𝓡₁ 𝓡₂*|` over `Δ ∈ [lo, hi]` first falls
    /// below `level`, linearly interpolated between ζ nodes. `None` if it never does.
    pub fn boundary_depth(&self, level: f64, lo: f64, hi: f64) -> Option<f64> {
        let ids: Vec<usize> = (0..self.delta.len())
            .filter(|&i| self.delta[i] >= lo && self.delta[i] <= hi)
            .collect();
        let worst: Vec<f64> = (0..self.zeta.len())
            .map(|iz| ids.iter().map(|&id| self.product(iz, id).norm()).fold(f64::INFINITY, f64::min))
            .collect();
        for iz in 0..worst.len() {
            if worst[iz] < level {
                if iz == 0 {
                    return Some(self.zeta[0]);
                }
                let (a, b) = (worst[iz - 1], worst[iz]);
                let t = (a - level) / (a - b);
                return Some(self.zeta[iz - 1] + t * (self.zeta[iz] - self.zeta[iz - 1]));
            }
        }
        None
    }

    /// Largest deviation of `arg(𝓡₁ 𝓡₂*)` from its circular mean over the
    /// nodes with `Δ ∈ [lo, hi]`, `ζ ≤ zeta_max` and magnitude above `level`.
    pub fn arg_spread(&self, level: f64, lo: f64, hi: f64, zeta_max: f64) -> f64 {
        let mut vals = Vec::new();
        for iz in 0..self.zeta.len() {
            if self.zeta[iz] > zeta_max {
                continue;
            }
            for id in 0..self.delta.len() {
                let p = self.product(iz, id);
                if self.delta[id] >= lo && self.delta[id] <= hi && p.norm() > level {
                    vals.push(p / p.norm());
                }
            }
        }
        if vals.is_empty() {
            return 0.0;
        }
        let mean: C64 = vals.iter().sum();
        let mean = mean / mean.norm();
        vals.iter().map(|v| (v * mean.conj()).arg().abs()).fold(0.0, f64::max)
    }

    /// CSV with columns `delta, zeta, re_R1, im_R1, re_R2, im_R2, abs_prod, arg_prod`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(b"delta,zeta,re_R1,im_R1,re_R2,im_R2,abs_prod,arg_prod\n")?;
        for iz in 0..self.zeta.len() {
            for id in 0..self.delta.len() {
                let k = iz * self.delta.len() + id;
                let p = self.product(iz, id);
                let cols = [
                    self.delta[id],
                    self.zeta[iz],
                    self.r1[k].re,
                    self.r1[k].im,
                    self.r2[k].re,
                    self.r2[k].im,
                    p.norm(),
                    p.arg(),
                ];
                let line: Vec<String> = cols.iter().map(|v| fmt_g(*v)).collect();
                writeln!(w, "{}", line.join(","))?;
            }
        }
        Ok(())
    }
}

/// Numeric propagators of one field history at every `(ζ, Δ)`, laid out `[ζ][Δ]`.
pub fn propagator_grid(field: &FieldEnvelope, delta: &[f64]) -> Result<Vec<Propagator2>> {
    if let Some(&d) = delta.iter().max_by(|a, b| a.abs().total_cmp(&b.abs())) {
        for j in 0..field.zeta.len() {
            control_propagator(&field.trace(j), d)?;
        }
    }
    let per_slice: Vec<Vec<Propagator2>> = field
        .samples
        .par_iter()
        .map(|s| {
            let table = StepTable::new(s, field.time.dt);
            delta.iter().map(|&d| table.propagator(d)).collect()
        })
        .collect();
    Ok(per_slice.into_iter().flatten().collect())
}

/// Rephasing product map from the two control-field histories.
pub fn rephasing_product_map(c1: &FieldEnvelope, c2: &FieldEnvelope, delta: &[f64]) -> Result<RephasingMap> {
    if c1.zeta != c2.zeta {
        return Err(Error::Config("control field histories use different ζ grids".into()));
    }
    let u1 = propagator_grid(c1, delta)?;
    let u2 = propagator_grid(c2, delta)?;
    RephasingMap::from_propagators(delta.to_vec(), c1.zeta.clone(), &u1, &u2)
}

/// `|U₂₁|²` for every propagator.
pub fn excitation_map(u: &[Propagator2]) -> Vec<f64> {
    u.iter().map(super::propagator::remanent_excitation).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Direction, TimeGrid};

    #[test]
    fn zero_fields_give_zero_map() {
        let tg = TimeGrid::covering(-1.0, 1.0, 0.01);
        let f = FieldEnvelope::zeros(Direction::Forward, vec![0.0, 0.5], tg);
        let m = rephasing_product_map(&f, &f, &[-1.0, 0.0, 1.0]).unwrap();
        assert!(m.magnitude().iter().flatten().all(|&v| v == 0.0));
        assert!(m.contour(AP_LEVEL).is_empty());
        assert_eq!(m.boundary_depth(AP_LEVEL, -1.0, 1.0), Some(0.0));
    }

    #[test]
    fn grid_mismatch_is_config_error() {
        let tg = TimeGrid::covering(-1.0, 1.0, 0.01);
        let a = FieldEnvelope::zeros(Direction::Forward, vec![0.0, 0.5], tg);
        let b = FieldEnvelope::zeros(Direction::Forward, vec![0.0, 0.25, 0.5], tg);
        assert!(matches!(rephasing_product_map(&a, &b, &[0.0]), Err(Error::Config(_))));
    }

    #[test]
    fn boundary_interpolates() {
        let one = C64::new(1.0, 0.0);
        let m = RephasingMap {
            delta: vec![0.0],
            zeta: vec![0.0, 1.0, 2.0],
            r1: vec![one, one * 0.99, one * 0.97],
            r2: vec![one; 3],
        };
        let z = m.boundary_depth(0.98, -1.0, 1.0).unwrap();
        assert!((z - 1.5).abs() < 1e-12);
    }

    #[test]
    fn csv_layout() {
        let one = C64::new(1.0, 0.0);
        let m = RephasingMap {
            delta: vec![-1.0, 1.0],
            zeta: vec![0.0],
            r1: vec![one, C64::new(0.0, 1.0)],
            r2: vec![one, one],
        };
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "-1,0,1,0,1,0,1,0");
        assert!(lines[2].starts_with("1,0,0,1,1,0,1,1.57079632679"));
    }
}
