use std::collections::VecDeque;
use std::io::Write;

use log::{debug, info};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::coulomb::hartree;
use super::density::{density_from_grid, linear_energy, total_energy};
use crate::bloch::{
    fermi_and_gap, solve_grid, EigenOptions, FiberSolution, KGrid, PotentialCoupling,
    DEFAULT_GAP_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::pwbasis::{PeriodicFunction, PlaneWaveBasis};

/// Self-consistency model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// `H = -Delta/2 + vext`, independent of the density.
    Linear,
    /// `H = -Delta/2 + vext + (rho - rho_bar) * G_1`.
    Rhf,
}

#[derive(Debug, Clone)]
pub struct SCFConfig {
    /// Electron pairs per cell.
    pub nocc: usize,
    /// Step `beta` in `rho <- (1 - beta) rho + beta rho_out`.
    pub mixing: f64,
    /// Stop once the L-inf norm of the density update is below this.
    pub tol_density: f64,
    pub max_iter: usize,
    pub gap_tolerance: f64,
    /// Anderson history length; 0 keeps plain linear mixing.
    pub anderson_depth: usize,
    pub model: Model,
    pub eigen: EigenOptions,
}

impl Default for SCFConfig {
    fn default() -> Self {
        Self {
            nocc: 4,
            mixing: 0.5,
            tol_density: 1e-7,
            max_iter: 100,
            gap_tolerance: DEFAULT_GAP_TOLERANCE,
            anderson_depth: 0,
            model: Model::Rhf,
            eigen: EigenOptions::default(),
        }
    }
}

impl SCFConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mixing > 0.0 && self.mixing <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "mixing must lie in (0, 1], got {}",
                self.mixing
            )));
        }
        if !(self.tol_density > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tol_density must be positive, got {}",
                self.tol_density
            )));
        }
        if self.nocc == 0 || self.max_iter == 0 {
            return Err(Error::InvalidArgument(
                "nocc and max_iter must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One line of the SCF log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScfLogRow {
    pub iter: usize,
    /// L-inf norm of the density update produced by this iteration.
    pub residual_linf: f64,
    /// Energy of the state diagonalised in this iteration.
    pub energy: f64,
    pub gap: f64,
    /// `c_0 |cell|` of the next input density.
    pub charge: f64,
}

#[derive(Debug, Clone)]
pub struct SCFResult {
    /// Density of the occupied states of the last Hamiltonian.
    pub density: PeriodicFunction,
    pub energy_per_cell: f64,
    pub fermi: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
    pub fiber_solutions: Vec<FiberSolution>,
    pub log: Vec<ScfLogRow>,
}

/// Uniform density holding `nocc` electron pairs per cell.
pub fn uniform_density(basis: &PlaneWaveBasis, nocc: usize) -> PeriodicFunction {
    PeriodicFunction::constant(basis.rlat(), nocc as f64 / basis.rlat().cell_volume())
}

/// Runs the fixed-point iteration `rho -> H[rho] -> rho_out` on `grid`.
///
/// The linear model needs a single diagonalisation; its residual is reported
/// as zero since the output density does not depend on the input.
pub fn scf(
    basis: &PlaneWaveBasis,
    grid: &KGrid,
    vext: &PeriodicFunction,
    cfg: &SCFConfig,
    rho_init: &PeriodicFunction,
) -> Result<SCFResult> {
    scf_warm(basis, grid, vext, cfg, rho_init, None)
}

/// As [`scf`], with the first diagonalisation started from `guesses`
/// (one solution per fiber of `grid`, in grid order).
pub fn scf_warm(
    basis: &PlaneWaveBasis,
    grid: &KGrid,
    vext: &PeriodicFunction,
    cfg: &SCFConfig,
    rho_init: &PeriodicFunction,
    guesses: Option<Vec<FiberSolution>>,
) -> Result<SCFResult> {
    cfg.validate()?;
    let volume = basis.rlat().cell_volume();
    let charge = rho_init.c0().re * volume;
    if (charge - cfg.nocc as f64).abs() > 1e-10 || !rho_init.is_real() {
        return Err(Error::InvalidArgument(format!(
            "initial density must be real and hold {} pairs, holds {charge}",
            cfg.nocc
        )));
    }
    let nbands = cfg.nocc + 1;
    let mut rho = rho_init.clone();
    let mut guesses = guesses;
    let mut history: VecDeque<(PeriodicFunction, PeriodicFunction)> = VecDeque::new();
    let mut log = Vec::new();

    for iter in 1..=cfg.max_iter {
        let potential = match cfg.model {
            Model::Linear => vext.clone(),
            Model::Rhf => vext.add(&hartree(&rho.shifted(-rho.c0().re))?),
        };
        let coupling = PotentialCoupling::new(&potential, basis);
        let solutions = solve_grid(
            grid,
            basis,
            &coupling,
            nbands,
            guesses.as_deref(),
            &cfg.eigen,
        )?;
        let edges = fermi_and_gap(&solutions, cfg.nocc, cfg.gap_tolerance)?;
        let rho_out = density_from_grid(basis, &solutions, cfg.nocc)?;
        let energy = match cfg.model {
            Model::Linear => linear_energy(basis, &solutions, &rho_out, vext, cfg.nocc)?,
            Model::Rhf => total_energy(basis, &solutions, &rho_out, vext, cfg.nocc)?,
        };

        let (next, residual) = match cfg.model {
            Model::Linear => (rho_out.clone(), 0.0),
            Model::Rhf => {
                let next = mix(&rho, &rho_out, cfg, &mut history)?;
                let residual = next.sub(&rho).sup_norm_refined();
                (next, residual)
            }
        };
        let row = ScfLogRow {
            iter,
            residual_linf: residual,
            energy,
            gap: edges.gap,
            charge: next.c0().re * volume,
        };
        debug!(
            "scf iter {iter}: residual {residual:.3e}, energy {energy:.12}, gap {:.6}",
            edges.gap
        );
        log.push(row);
        rho = next;

        if residual < cfg.tol_density {
            info!("scf converged in {iter} iterations (residual {residual:.3e})");
            return Ok(SCFResult {
                density: rho_out,
                energy_per_cell: energy,
                fermi: edges.fermi,
                gap: edges.gap,
                iterations: iter,
                converged: true,
                residual,
                fiber_solutions: solutions,
                log,
            });
        }
        guesses = Some(solutions);
    }
    Err(Error::NotConverged {
        iterations: cfg.max_iter,
        residual: log.last().map_or(f64::NAN, |r| r.residual_linf),
    })
}

/// Next input density from the current input `rho` and output `rho_out`.
fn mix(
    rho: &PeriodicFunction,
    rho_out: &PeriodicFunction,
    cfg: &SCFConfig,
    history: &mut VecDeque<(PeriodicFunction, PeriodicFunction)>,
) -> Result<PeriodicFunction> {
    let beta = cfg.mixing;
    let residual = rho_out.sub(rho);
    if cfg.anderson_depth == 0 {
        return Ok(rho.linear_combination(1.0, &residual, beta));
    }
    history.push_back((rho.clone(), residual));
    while history.len() > cfg.anderson_depth {
        history.pop_front();
    }
    let weights = anderson_weights(
        history
            .iter()
            .map(|(_, r)| r)
            .collect::<Vec<_>>()
            .as_slice(),
    );
    let mut next = PeriodicFunction::zero(rho.rlat());
    for ((x, r), w) in history.iter().zip(&weights) {
        next = next.add(&x.linear_combination(*w, r, beta * w));
    }
    // Charge is preserved exactly only up to rounding in the weights.
    let target = rho.c0().re;
    Ok(next.shifted(target - next.c0().re).into_real()?)
}

/// Minimises `|sum_i w_i r_i|` subject to `sum_i w_i = 1` in the coefficient
/// l2 norm. Falls back to the newest residual alone if the system is singular.
fn anderson_weights(residuals: &[&PeriodicFunction]) -> Vec<f64> {
    let m = residuals.len();
    let gram = DMatrix::from_fn(m, m, |i, j| inner(residuals[i], residuals[j]));
    let scale = gram.diagonal().max().max(f64::MIN_POSITIVE);
    let regularised = &gram + DMatrix::identity(m, m) * (1e-12 * scale);
    let ones = DVector::from_element(m, 1.0);
    match regularised.lu().solve(&ones) {
        Some(y) if y.sum().abs() > 0.0 && y.iter().all(|v| v.is_finite()) => {
            let s = y.sum();
            y.iter().map(|v| v / s).collect()
        }
        _ => {
            let mut w = vec![0.0; m];
            w[m - 1] = 1.0;
            w
        }
    }
}

fn inner(f: &PeriodicFunction, g: &PeriodicFunction) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, fk) in f.iter() {
        acc += fk.conj() * g.coeff(*m);
    }
    acc.re
}

/// Writes the SCF log as CSV.
pub fn write_scf_log<W: Write>(rows: &[ScfLogRow], mut out: W) -> Result<()> {
    writeln!(out, "iter,residual_linf,energy_ha,gap_ha")?;
    for r in rows {
        writeln!(
            out,
            "{},{:.6e},{:.12},{:.12}",
            r.iter, r.residual_linf, r.energy, r.gap
        )?;
    }
    Ok(())
}
