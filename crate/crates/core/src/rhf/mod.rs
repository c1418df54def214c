//! Reduced Hartree-Fock model: densities from occupied Bloch states, the
//! periodic Coulomb kernel, energies per cell and the self-consistent loop.

mod coulomb;
mod density;
mod scf;

pub use coulomb::{coulomb_energy, hartree, NEUTRALITY_TOLERANCE};
pub use density::{
    band_energy, density_from_grid, kinetic_energy_per_cell, linear_energy, total_energy,
};
pub use scf::{
    scf, scf_warm, uniform_density, write_scf_log, Model, SCFConfig, SCFResult, ScfLogRow,
};
