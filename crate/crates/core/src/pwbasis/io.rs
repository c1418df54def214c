//! Text table serialisation of [`PeriodicFunction`].
//!
//! ```text
//! # rlat b1x b1y b1z b2x b2y b2z b3x b3y b3z
//! m1 m2 m3 re im
//! ...
//! ```
//!
//! Floats are written in shortest round-trip form, so a write/read cycle is
//! bitwise exact. Other `#` lines are comments.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use super::PeriodicFunction;
use crate::error::{Error, Result};
use crate::lattice::{ReciprocalLattice, Vec3};

pub fn write_periodic_function<W: Write>(f: &PeriodicFunction, mut out: W) -> Result<()> {
    write!(out, "# rlat")?;
    for b in f.rlat().vectors() {
        for x in b.iter() {
            write!(out, " {:e}", x)?;
        }
    }
    writeln!(out)?;
    for (m, c) in f.iter() {
        writeln!(out, "{} {} {} {:e} {:e}", m[0], m[1], m[2], c.re, c.im)?;
    }
    Ok(())
}

/// Reads a table written by [`write_periodic_function`]. The real-valued flag
/// is restored when the coefficients are Hermitian-symmetric.
pub fn read_periodic_function<R: BufRead>(input: R) -> Result<PeriodicFunction> {
    let mut rlat: Option<ReciprocalLattice> = None;
    let mut coeffs = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Parse(format!("line {}: {}", lineno + 1, what));
        if let Some(rest) = line.strip_prefix("# rlat") {
            let vals: Vec<f64> = rest
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| bad("invalid float in rlat header"))
                })
                .collect::<Result<_>>()?;
            if vals.len() != 9 {
                return Err(bad("rlat header needs 9 floats"));
            }
            let v = |i: usize| Vec3::new(vals[3 * i], vals[3 * i + 1], vals[3 * i + 2]);
            rlat = Some(ReciprocalLattice::from_vectors(v(0), v(1), v(2))?);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(bad("expected 'm1 m2 m3 re im'"));
        }
        let mut m = [0i32; 3];
        for d in 0..3 {
            m[d] = fields[d]
                .parse()
                .map_err(|_| bad("invalid integer index"))?;
        }
        let re: f64 = fields[3].parse().map_err(|_| bad("invalid real part"))?;
        let im: f64 = fields[4]
            .parse()
            .map_err(|_| bad("invalid imaginary part"))?;
        coeffs.push((m, Complex64::new(re, im)));
    }
    let rlat = rlat.ok_or_else(|| Error::Parse("missing '# rlat' header".into()))?;
    let f = PeriodicFunction::from_coeffs(&rlat, coeffs);
    Ok(match f.clone().into_real() {
        Ok(real) => real,
        Err(_) => f,
    })
}
