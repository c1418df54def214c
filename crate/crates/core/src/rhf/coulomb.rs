use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pwbasis::{PeriodicFunction, REAL_SYMMETRY_TOLERANCE};

/// Largest `|c_0|` accepted as neutral by the Coulomb kernel.
pub const NEUTRALITY_TOLERANCE: f64 = 1e-10;

fn check_neutral(f: &PeriodicFunction) -> Result<()> {
    let c0 = f.c0().norm();
    if c0 > NEUTRALITY_TOLERANCE {
        return Err(Error::NotNeutral {
            c0,
            tolerance: NEUTRALITY_TOLERANCE,
        });
    }
    if !f.is_real() {
        return Err(Error::InvalidArgument(format!(
            "Coulomb kernel needs a real-valued function (symmetry tolerance {REAL_SYMMETRY_TOLERANCE:e})"
        )));
    }
    Ok(())
}

/// Periodic Coulomb potential `f * G_1`: coefficients `4 pi c_k / |k|^2`,
/// with the `k = 0` mode set to zero.
pub fn hartree(f: &PeriodicFunction) -> Result<PeriodicFunction> {
    check_neutral(f)?;
    let rlat = f.rlat();
    let coeffs: BTreeMap<_, _> = f
        .iter()
        .filter(|(m, _)| **m != [0, 0, 0])
        .map(|(m, c)| (*m, c * (4.0 * PI / rlat.point(*m).norm_squared())))
        .collect();
    Ok(PeriodicFunction::from_parts_unchecked(rlat, coeffs, true))
}

/// `D_1(f, g) = 4 pi |cell| sum_{k != 0} conj(g_k) f_k / |k|^2`.
pub fn coulomb_energy(f: &PeriodicFunction, g: &PeriodicFunction) -> Result<f64> {
    check_neutral(f)?;
    check_neutral(g)?;
    let rlat = f.rlat();
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, fk) in f.iter() {
        if *m == [0, 0, 0] {
            continue;
        }
        let gk = g.coeff(*m);
        if gk.norm() == 0.0 {
            continue;
        }
        acc += gk.conj() * fk / rlat.point(*m).norm_squared();
    }
    Ok(4.0 * PI * rlat.cell_volume() * acc.re)
}
