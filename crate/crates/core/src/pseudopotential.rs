//! External potentials: the empirical local pseudopotential of diamond
//! silicon and the self-consistent-compatible variant for the rHF model.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::pwbasis::{Miller, PeriodicFunction};
use crate::rhf::hartree;

/// Symmetric form factors keyed by `|k|^2` in units of `(2 pi / a)^2`, in Hartree.
#[derive(Debug, Clone, PartialEq)]
pub struct FormFactorTable {
    entries: BTreeMap<u32, f64>,
}

impl FormFactorTable {
    /// Silicon values: -0.105 (shell 3), 0.02 (shell 8), 0.04 (shell 11).
    pub fn silicon() -> Self {
        Self {
            entries: BTreeMap::from([(3, -0.105), (8, 0.02), (11, 0.04)]),
        }
    }

    pub fn new(entries: impl IntoIterator<Item = (u32, f64)>) -> Self {
        Self {
            entries: entries.into_iter().collect(),
        }
    }

    /// Form factor for a shell; zero when the shell is absent.
    pub fn get(&self, shell: u32) -> f64 {
        self.entries.get(&shell).copied().unwrap_or(0.0)
    }

    pub fn max_shell(&self) -> u32 {
        self.entries.keys().copied().max().unwrap_or(0)
    }

    pub fn entries(&self) -> &BTreeMap<u32, f64> {
        &self.entries
    }
}

impl Default for FormFactorTable {
    fn default() -> Self {
        Self::silicon()
    }
}

/// `V_k = S[|k|^2] cos(a (k1 + k2 + k3) / 8)` over every reciprocal vector
/// with `|k|^2 <= kmax2 (2 pi / a)^2`; only shells present in `table` are stored.
///
/// The phase places the two atoms of the diamond basis at `+-a/8 (1,1,1)`, so
/// `lat` must be the fcc lattice built with the same `a`.
pub fn cohen_bergstresser(
    lat: &Lattice,
    a: f64,
    kmax2: f64,
    table: &FormFactorTable,
) -> Result<PeriodicFunction> {
    if kmax2 < table.max_shell() as f64 {
        return Err(Error::InvalidArgument(format!(
            "kmax2 = {kmax2} excludes form-factor shell {}",
            table.max_shell()
        )));
    }
    let rlat = lat.reciprocal()?;
    let unit = 2.0 * PI / a;
    let sigma_min = rlat
        .matrix()
        .singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let bound = ((kmax2.sqrt() * unit) / sigma_min).ceil() as i32;
    let mut coeffs: Vec<(Miller, Complex64)> = Vec::new();
    for m1 in -bound..=bound {
        for m2 in -bound..=bound {
            for m3 in -bound..=bound {
                let k = rlat.point([m1, m2, m3]);
                let shell = k.norm_squared() / (unit * unit);
                let nearest = shell.round();
                if (shell - nearest).abs() > 1e-9 || nearest > kmax2 {
                    continue;
                }
                let s = table.get(nearest as u32);
                if s == 0.0 {
                    continue;
                }
                let v = s * (a * (k.x + k.y + k.z) / 8.0).cos();
                coeffs.push(([m1, m2, m3], Complex64::new(v, 0.0)));
            }
        }
    }
    PeriodicFunction::real_from_coeffs(&rlat, coeffs)
}

/// `V_lin - hartree(rho_ref - mean(rho_ref))`: a potential for which the
/// self-consistent rHF density coincides with `rho_ref` whenever `rho_ref` is
/// the ground-state density of `V_lin` on the same discretisation.
pub fn rhf_pseudopotential(
    vlin: &PeriodicFunction,
    rho_ref: &PeriodicFunction,
) -> Result<PeriodicFunction> {
    if !rho_ref.is_real() {
        return Err(Error::InvalidArgument(
            "reference density must be real-valued".into(),
        ));
    }
    let fluctuation = rho_ref.shifted(-rho_ref.c0().re);
    let v_h = hartree(&fluctuation)?;
    Ok(vlin.sub(&v_h))
}
