//! Brillouin-zone sampling grid, Bloch fiber Hamiltonians and their lowest
//! eigenpairs.

mod eigen;
mod hamiltonian;
mod kgrid;
pub(crate) mod linalg;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pwbasis::PlaneWaveBasis;

pub use eigen::{
    eigensolve_lowest, max_relative_residual, orthonormality_defect, solve_lowest, EigenMethod,
    EigenOptions, FiberSolution, HermitianOperator, RESIDUAL_INVARIANT,
};
pub use hamiltonian::{assemble, FiberHamiltonian, PotentialCoupling};
pub use kgrid::{kgrid, KGrid};

/// Default minimal gap, Hartree.
pub const DEFAULT_GAP_TOLERANCE: f64 = 1e-6;

/// Band edges across a grid. `fermi` sits mid-gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapInfo {
    pub homo: f64,
    pub lumo: f64,
    pub gap: f64,
    pub fermi: f64,
}

/// Highest band `nocc` and lowest band `nocc + 1` over all fibers; fails
/// when the gap does not exceed `gap_tolerance`.
pub fn fermi_and_gap(
    solutions: &[FiberSolution],
    nocc: usize,
    gap_tolerance: f64,
) -> Result<GapInfo> {
    if nocc == 0 || solutions.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one occupied band and one fiber".into(),
        ));
    }
    let mut homo = f64::NEG_INFINITY;
    let mut lumo = f64::INFINITY;
    for s in solutions {
        if s.eigenvalues.len() < nocc + 1 {
            return Err(Error::InvalidArgument(format!(
                "fiber carries {} eigenvalues, need {}",
                s.eigenvalues.len(),
                nocc + 1
            )));
        }
        homo = homo.max(s.eigenvalues[nocc - 1]);
        lumo = lumo.min(s.eigenvalues[nocc]);
    }
    let gap = lumo - homo;
    if !(gap > gap_tolerance) {
        return Err(Error::Metallic {
            gap,
            tolerance: gap_tolerance,
            homo,
            lumo,
        });
    }
    Ok(GapInfo {
        homo,
        lumo,
        gap,
        fermi: 0.5 * (homo + lumo),
    })
}

/// Solves every fiber of `grid` for its lowest `nbands` pairs. Fibers are
/// independent and may run on the rayon pool; the output keeps grid order.
pub fn solve_grid(
    grid: &KGrid,
    basis: &PlaneWaveBasis,
    coupling: &PotentialCoupling,
    nbands: usize,
    guesses: Option<&[FiberSolution]>,
    opts: &EigenOptions,
) -> Result<Vec<FiberSolution>> {
    if let Some(g) = guesses {
        if g.len() != grid.len() {
            return Err(Error::InvalidArgument(
                "warm-start set does not match the grid".into(),
            ));
        }
    }
    grid.points()
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let h = FiberHamiltonian::new(*q, basis, coupling);
            let guess: Option<&DMatrix<Complex64>> = guesses.map(|g| &g[i].eigenvectors);
            solve_lowest(&h, nbands, guess, *q, opts)
        })
        .collect()
}
