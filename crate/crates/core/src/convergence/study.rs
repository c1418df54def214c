use std::io::Write;
use std::time::Instant;

use log::info;

use super::fit::FitResult;
use crate::bloch::kgrid;
use crate::error::{Error, Result};
use crate::pseudopotential::rhf_pseudopotential;
use crate::pwbasis::{PeriodicFunction, PlaneWaveBasis};
use crate::rhf::{scf, scf_warm, uniform_density, Model, SCFConfig, SCFResult};
use crate::units::hartree_to_ev;

/// Errors of one grid size against the reference grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub l: usize,
    /// Energy per cell, Hartree.
    pub energy: f64,
    /// `|E_L - E_ref|`, Hartree.
    pub energy_error: f64,
    /// `|rho_L - rho_ref|_inf`, electrons per Bohr^3.
    pub density_error_inf: f64,
    /// Seconds spent in this grid's SCF run. Not reproducible across runs.
    pub wall_time: f64,
    pub scf_iterations: usize,
    pub scf_residual: f64,
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub ls: Vec<usize>,
    pub l_ref: usize,
    /// `scf.model` selects the model of the whole study.
    pub scf: SCFConfig,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        self.scf.validate()?;
        if self.ls.is_empty() || self.l_ref == 0 || self.ls.contains(&0) {
            return Err(Error::InvalidArgument(
                "study needs grid sizes and a reference size, all positive".into(),
            ));
        }
        if let Some(&l) = self.ls.iter().find(|&&l| l > self.l_ref) {
            return Err(Error::InvalidArgument(format!(
                "grid size {l} exceeds the reference size {}",
                self.l_ref
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Study {
    /// Ascending in `L`, one per distinct requested size.
    pub rows: Vec<StudyRow>,
    pub l_ref: usize,
    pub reference: SCFResult,
    /// External potential of every run: `vlin` itself in the linear model,
    /// the rHF pseudopotential built from the reference linear density otherwise.
    pub potential: PeriodicFunction,
}

/// Runs the model on every grid of `cfg.ls` and on the reference grid, all in
/// the same basis, and compares energies per cell and densities.
///
/// In the rHF model the external potential is `vlin - (rho_ref - mean) * G_1`
/// with `rho_ref` the linear density on the reference grid. The rHF reference
/// run starts from that density, whose fixed point it is, and every other grid
/// starts from the converged reference density.
pub fn run_study(
    basis: &PlaneWaveBasis,
    vlin: &PeriodicFunction,
    cfg: &StudyConfig,
) -> Result<Study> {
    cfg.validate()?;
    let mut ls = cfg.ls.clone();
    ls.sort_unstable();
    ls.dedup();
    let wrap = |l: usize| {
        move |e: Error| Error::Study {
            l,
            source: Box::new(e),
        }
    };

    let ref_grid = kgrid(basis.rlat(), cfg.l_ref).map_err(wrap(cfg.l_ref))?;
    let linear_cfg = SCFConfig {
        model: Model::Linear,
        ..cfg.scf.clone()
    };
    let start = Instant::now();
    let uniform = uniform_density(basis, cfg.scf.nocc);
    let linear_ref = scf(basis, &ref_grid, vlin, &linear_cfg, &uniform).map_err(wrap(cfg.l_ref))?;
    let (reference, potential) = match cfg.scf.model {
        Model::Linear => (linear_ref, vlin.clone()),
        Model::Rhf => {
            let v_hf = rhf_pseudopotential(vlin, &linear_ref.density).map_err(wrap(cfg.l_ref))?;
            let rho = linear_ref
                .density
                .clone()
                .into_real()
                .map_err(wrap(cfg.l_ref))?;
            let reference = scf_warm(
                basis,
                &ref_grid,
                &v_hf,
                &cfg.scf,
                &rho,
                Some(linear_ref.fiber_solutions),
            )
            .map_err(wrap(cfg.l_ref))?;
            (reference, v_hf)
        }
    };
    let ref_time = start.elapsed().as_secs_f64();
    info!(
        "reference L = {}: energy {:.12} Ha, {:.1} s",
        cfg.l_ref, reference.energy_per_cell, ref_time
    );
    let rho_start = match cfg.scf.model {
        Model::Linear => uniform,
        Model::Rhf => reference
            .density
            .clone()
            .into_real()
            .map_err(wrap(cfg.l_ref))?,
    };

    let mut rows = Vec::with_capacity(ls.len());
    for &l in &ls {
        let row = if l == cfg.l_ref {
            StudyRow {
                l,
                energy: reference.energy_per_cell,
                energy_error: 0.0,
                density_error_inf: 0.0,
                wall_time: ref_time,
                scf_iterations: reference.iterations,
                scf_residual: reference.residual,
            }
        } else {
            let start = Instant::now();
            let grid = kgrid(basis.rlat(), l).map_err(wrap(l))?;
            let run = scf(basis, &grid, &potential, &cfg.scf, &rho_start).map_err(wrap(l))?;
            let wall_time = start.elapsed().as_secs_f64();
            let density_error_inf = run.density.sub(&reference.density).sup_norm_refined();
            StudyRow {
                l,
                energy: run.energy_per_cell,
                energy_error: (run.energy_per_cell - reference.energy_per_cell).abs(),
                density_error_inf,
                wall_time,
                scf_iterations: run.iterations,
                scf_residual: run.residual,
            }
        };
        info!(
            "L = {l}: energy error {:.3e} Ha, density error {:.3e}, {} iterations, {:.1} s",
            row.energy_error, row.density_error_inf, row.scf_iterations, row.wall_time
        );
        rows.push(row);
    }
    Ok(Study {
        rows,
        l_ref: cfg.l_ref,
        reference,
        potential,
    })
}

/// Fit of one error series, labelled for the CSV trailer.
#[derive(Debug, Clone, Copy)]
pub struct LabelledFit<'a> {
    pub series: &'a str,
    pub fit: &'a FitResult,
}

/// Writes the study table, then one comment line per fit.
pub fn write_study_csv<W: Write>(
    rows: &[StudyRow],
    fits: &[LabelledFit<'_>],
    alpha_theory: Option<f64>,
    mut out: W,
) -> Result<()> {
    writeln!(
        out,
        "L,energy_error_ha,energy_error_ev,density_error_inf,wall_time_s"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{:.12e},{:.12e},{:.12e},{:.3}",
            r.l,
            r.energy_error,
            hartree_to_ev(r.energy_error),
            r.density_error_inf,
            r.wall_time
        )?;
    }
    let theory = alpha_theory.map_or_else(|| "nan".to_string(), |a| format!("{a:.6e}"));
    for f in fits {
        writeln!(
            out,
            "# alpha_obs={:.6}, r2={:.6}, alpha_theory={}, series={}",
            f.fit.alpha_obs, f.fit.r_squared, theory, f.series
        )?;
        if !f.fit.dropped_zero.is_empty() {
            writeln!(
                out,
                "# series={} dropped zero-error L={:?}",
                f.series, f.fit.dropped_zero
            )?;
        }
        if let Some(l) = f.fit.dropped_transient {
            writeln!(out, "# series={} dropped transient L={l}", f.series)?;
        }
        if f.fit.non_decaying {
            writeln!(out, "# series={} is not decaying", f.series)?;
        }
    }
    Ok(())
}
