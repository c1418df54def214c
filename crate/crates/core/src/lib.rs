//! Plane-wave kernel for periodic linear and reduced Hartree-Fock models
//! sampled on uniform Brillouin-zone grids.

pub mod bloch;
pub mod cli;
pub mod convergence;
pub mod error;
pub mod lattice;
pub mod pseudopotential;
pub mod pwbasis;
pub mod rhf;
pub mod units;

pub use error::{Error, Result};
