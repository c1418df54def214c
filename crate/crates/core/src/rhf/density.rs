use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::coulomb::coulomb_energy;
use crate::bloch::linalg::{gemm, Op};
use crate::bloch::FiberSolution;
use crate::error::{Error, Result};
use crate::pwbasis::{hermitian_from_half, PeriodicFunction, PlaneWaveBasis};

/// Fibers folded into one partial density matrix. Fixed so that the
/// reduction order does not depend on the worker count.
const CHUNK: usize = 64;

fn check_occupied(solutions: &[FiberSolution], nocc: usize, dim: usize) -> Result<()> {
    if solutions.is_empty() || nocc == 0 {
        return Err(Error::InvalidArgument(
            "need at least one fiber and one occupied band".into(),
        ));
    }
    for s in solutions {
        if s.eigenvectors.ncols() < nocc || s.eigenvectors.nrows() != dim {
            return Err(Error::InvalidArgument(format!(
                "fiber at q = {:?} holds a {}x{} eigenvector block, need {dim}x{nocc} or wider",
                s.q,
                s.eigenvectors.nrows(),
                s.eigenvectors.ncols()
            )));
        }
    }
    Ok(())
}

/// `(1/N) sum_Q sum_{n <= nocc} c_{n,Q} c_{n,Q}^H` over the `N` fibers.
fn density_matrix(solutions: &[FiberSolution], nocc: usize, dim: usize) -> DMatrix<Complex64> {
    let weight = Complex64::new(1.0 / solutions.len() as f64, 0.0);
    let partial: Vec<DMatrix<Complex64>> = solutions
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut stacked = DMatrix::zeros(dim, nocc * chunk.len());
            for (f, s) in chunk.iter().enumerate() {
                stacked
                    .columns_mut(f * nocc, nocc)
                    .copy_from(&s.eigenvectors.columns(0, nocc));
            }
            let mut d = DMatrix::zeros(dim, dim);
            gemm(
                weight,
                &stacked,
                Op::N,
                &stacked,
                Op::H,
                Complex64::new(0.0, 0.0),
                &mut d,
            );
            d
        })
        .collect();
    let mut total = DMatrix::zeros(dim, dim);
    for d in &partial {
        total += d;
    }
    total
}

/// Grid-averaged density `(1/N) sum_Q sum_{n <= nocc} |u_{n,Q}|^2` of the
/// lowest `nocc` bands on every fiber.
pub fn density_from_grid(
    basis: &PlaneWaveBasis,
    solutions: &[FiberSolution],
    nocc: usize,
) -> Result<PeriodicFunction> {
    let n = basis.len();
    check_occupied(solutions, nocc, n)?;
    let d = density_matrix(solutions, nocc, n);
    let table = basis.differences();
    // g_k = sum over pairs with m_j - m_i = k of D[j, i]
    let mut acc = vec![Complex64::new(0.0, 0.0); table.millers.len()];
    for j in 0..n {
        for i in 0..n {
            acc[table.pair[j * n + i] as usize] += d[(j, i)];
        }
    }
    let half: BTreeMap<_, _> = table
        .millers
        .iter()
        .zip(acc)
        .filter(|(m, _)| **m >= [0, 0, 0])
        .map(|(m, c)| (*m, c))
        .collect();
    Ok(hermitian_from_half(
        basis.rlat(),
        half,
        1.0 / basis.rlat().cell_volume(),
    ))
}

/// `(1/N) sum_Q sum_{n <= nocc} sum_G |G + Q|^2 |c_{n,Q,G}|^2`, without the 1/2.
pub fn kinetic_energy_per_cell(
    basis: &PlaneWaveBasis,
    solutions: &[FiberSolution],
    nocc: usize,
) -> Result<f64> {
    check_occupied(solutions, nocc, basis.len())?;
    let total: f64 = solutions
        .iter()
        .map(|s| {
            let mut sum = 0.0;
            for (g, row) in basis.gvecs().iter().zip(s.eigenvectors.row_iter()) {
                let t = (g + s.q).norm_squared();
                sum += t * row
                    .columns(0, nocc)
                    .iter()
                    .map(|c| c.norm_sqr())
                    .sum::<f64>();
            }
            sum
        })
        .sum();
    Ok(total / solutions.len() as f64)
}

/// Energy of a linear model, `(1/2) kinetic + int vext rho`. With `rho`
/// built from the same states it equals the grid-averaged band sum.
pub fn linear_energy(
    basis: &PlaneWaveBasis,
    solutions: &[FiberSolution],
    density: &PeriodicFunction,
    vext: &PeriodicFunction,
    nocc: usize,
) -> Result<f64> {
    let kinetic = kinetic_energy_per_cell(basis, solutions, nocc)?;
    Ok(0.5 * kinetic + vext.integral_of_product(density).re)
}

/// rHF energy per cell: `(1/2) kinetic + int vext rho + (1/2) D_1(rho - rho_bar, rho - rho_bar)`
/// where `rho_bar` is the mean of `rho`.
pub fn total_energy(
    basis: &PlaneWaveBasis,
    solutions: &[FiberSolution],
    density: &PeriodicFunction,
    vext: &PeriodicFunction,
    nocc: usize,
) -> Result<f64> {
    let fluctuation = density.shifted(-density.c0().re);
    Ok(linear_energy(basis, solutions, density, vext, nocc)?
        + 0.5 * coulomb_energy(&fluctuation, &fluctuation)?)
}

/// Grid average of the lowest `nocc` eigenvalues.
pub fn band_energy(solutions: &[FiberSolution], nocc: usize) -> f64 {
    solutions
        .iter()
        .map(|s| s.eigenvalues[..nocc].iter().sum::<f64>())
        .sum::<f64>()
        / solutions.len() as f64
}
