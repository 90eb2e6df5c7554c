use std::io::Write;

use crate::format::fmt_g;
use crate::model::FieldEnvelope;

/// CSV with columns `t, zeta, re, im`, one row per sample, ζ-major.
pub fn write_field_csv<W: Write>(field: &FieldEnvelope, mut w: W) -> std::io::Result<()> {
    w.write_all(b"t,zeta,re,im\n")?;
    for (j, z) in field.zeta.iter().enumerate() {
        for (k, s) in field.samples[j].iter().enumerate() {
            writeln!(w, "{},{},{},{}", fmt_g(field.time.t(k)), fmt_g(*z), fmt_g(s.re), fmt_g(s.im))?;
        }
    }
    Ok(())
}

/// Rows of four little-endian `f64` values `(t, zeta, re, im)`, same order as the CSV.
pub fn write_field_binary<W: Write>(field: &FieldEnvelope, mut w: W) -> std::io::Result<()> {
    for (j, z) in field.zeta.iter().enumerate() {
        for (k, s) in field.samples[j].iter().enumerate() {
            for v in [field.time.t(k), *z, s.re, s.im] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}
