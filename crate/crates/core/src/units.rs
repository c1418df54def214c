//! Unit conversions used at the input/output boundary.
//!
//! Everything inside the crate is in Hartree atomic units (Bohr, Hartree).

/// Electron-volts per Hartree.
pub const HARTREE_TO_EV: f64 = 27.211386;

pub fn ev_to_hartree(ev: f64) -> f64 {
    ev / HARTREE_TO_EV
}

pub fn hartree_to_ev(ha: f64) -> f64 {
    ha * HARTREE_TO_EV
}
