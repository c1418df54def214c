use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use log::info;

use super::config::{InitDensity, LatticeSpec, PotentialSpec, RunConfig};
use crate::bloch::{kgrid, solve_lowest, FiberHamiltonian, PotentialCoupling};
use crate::convergence::{
    fit_density, fit_energy, riemann_report, run_study, theoretical_rate, write_study_csv,
    FitResult, FourierSpec, LabelledFit, RateBound, RiemannReport, Study, StudyConfig,
};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, Vec3};
use crate::pseudopotential::{cohen_bergstresser, rhf_pseudopotential, FormFactorTable};
use crate::pwbasis::{build_basis, write_periodic_function, PeriodicFunction, PlaneWaveBasis};
use crate::rhf::{scf, scf_warm, uniform_density, write_scf_log, Model, SCFConfig, SCFResult};
use crate::units::hartree_to_ev;

/// Largest `|k|^2` in units of `(2 pi / a)^2` kept in the form-factor sum.
const FORM_FACTOR_KMAX2: f64 = 11.0;

/// Lattice, basis and linear potential shared by every command.
pub struct System {
    pub lattice: Lattice,
    pub basis: PlaneWaveBasis,
    pub vlin: PeriodicFunction,
}

pub fn system(cfg: &RunConfig) -> Result<System> {
    let lattice = cfg.lattice.build()?;
    let rlat = lattice.reciprocal()?;
    let basis = build_basis(&rlat, cfg.ecutoff)?;
    let vlin = match (cfg.potential, &cfg.lattice) {
        (PotentialSpec::Zero, _) => PeriodicFunction::zero(&rlat),
        (PotentialSpec::CohenBergstresser, LatticeSpec::SiFcc { a }) => {
            cohen_bergstresser(&lattice, *a, FORM_FACTOR_KMAX2, &FormFactorTable::silicon())?
        }
        (PotentialSpec::CohenBergstresser, LatticeSpec::Explicit(_)) => {
            return Err(Error::Parse(
                "the cohen-bergstresser potential needs the si-fcc lattice".into(),
            ))
        }
    };
    info!(
        "basis: {} plane waves at {:.4} Ha",
        basis.len(),
        cfg.ecutoff
    );
    Ok(System {
        lattice,
        basis,
        vlin,
    })
}

fn linear_cfg(scf: &SCFConfig) -> SCFConfig {
    SCFConfig {
        model: Model::Linear,
        ..scf.clone()
    }
}

/// Eigenvalues of the linear Hamiltonian at each configured quasi-momentum.
///
/// CSV columns `q1,q2,q3,band,energy_ha,energy_ev`, with `q` in
/// reciprocal-lattice coordinates.
pub fn cmd_bands(cfg: &RunConfig, out: &mut dyn Write) -> Result<Vec<Vec<f64>>> {
    let sys = system(cfg)?;
    let nbands = cfg.bands.nbands.unwrap_or(cfg.scf.nocc + 1);
    if nbands > sys.basis.len() {
        return Err(Error::Parse(format!(
            "{nbands} bands requested from a basis of {}",
            sys.basis.len()
        )));
    }
    let coupling = PotentialCoupling::new(&sys.vlin, &sys.basis);
    let b = sys.basis.rlat().vectors();
    writeln!(out, "q1,q2,q3,band,energy_ha,energy_ev")?;
    let mut all = Vec::with_capacity(cfg.bands.q.len());
    for f in &cfg.bands.q {
        let q: Vec3 = b[0] * f[0] + b[1] * f[1] + b[2] * f[2];
        let h = FiberHamiltonian::new(q, &sys.basis, &coupling);
        let sol = solve_lowest(&h, nbands, None, q, &cfg.scf.eigen)?;
        for (n, e) in sol.eigenvalues.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{:.12},{:.10}",
                f[0],
                f[1],
                f[2],
                n + 1,
                e,
                hartree_to_ev(*e)
            )?;
        }
        all.push(sol.eigenvalues);
    }
    Ok(all)
}

/// One SCF run on the grid `cfg.grid`; writes the iteration log as CSV and,
/// if configured, the final density as a checkpoint.
///
/// In the rHF model the external potential is the linear potential minus the
/// Coulomb potential of the linear density on `hf_grid`.
pub fn cmd_scf(cfg: &RunConfig, out: &mut dyn Write) -> Result<SCFResult> {
    let sys = system(cfg)?;
    let rlat = sys.basis.rlat();
    let grid = kgrid(rlat, cfg.grid)?;
    let uniform = uniform_density(&sys.basis, cfg.scf.nocc);
    let linear = linear_cfg(&cfg.scf);
    let result = match cfg.scf.model {
        Model::Linear => scf(&sys.basis, &grid, &sys.vlin, &cfg.scf, &uniform)?,
        Model::Rhf => {
            let hf_l = cfg.hf_grid.unwrap_or(cfg.grid);
            let hf_run = scf(
                &sys.basis,
                &kgrid(rlat, hf_l)?,
                &sys.vlin,
                &linear,
                &uniform,
            )?;
            let v_hf = rhf_pseudopotential(&sys.vlin, &hf_run.density)?;
            match cfg.init {
                InitDensity::Uniform => scf(&sys.basis, &grid, &v_hf, &cfg.scf, &uniform)?,
                InitDensity::Linear if hf_l == cfg.grid => {
                    let rho = hf_run.density.clone().into_real()?;
                    scf_warm(
                        &sys.basis,
                        &grid,
                        &v_hf,
                        &cfg.scf,
                        &rho,
                        Some(hf_run.fiber_solutions),
                    )?
                }
                InitDensity::Linear => {
                    let start = scf(&sys.basis, &grid, &sys.vlin, &linear, &uniform)?;
                    let rho = start.density.clone().into_real()?;
                    scf_warm(
                        &sys.basis,
                        &grid,
                        &v_hf,
                        &cfg.scf,
                        &rho,
                        Some(start.fiber_solutions),
                    )?
                }
            }
        }
    };
    write_scf_log(&result.log, &mut *out)?;
    if let Some(path) = &cfg.checkpoint {
        let mut w = BufWriter::new(File::create(path)?);
        write_periodic_function(&result.density, &mut w)?;
        w.flush()?;
    }
    info!(
        "scf: {} iterations, energy {:.12} Ha, gap {:.6} Ha, residual {:.3e}",
        result.iterations, result.energy_per_cell, result.gap, result.residual
    );
    Ok(result)
}

#[derive(Debug, Clone)]
pub struct StudyReport {
    pub study: Study,
    pub energy_fit: Option<FitResult>,
    pub density_fit: Option<FitResult>,
    /// Constants from the potential of the study and the gap and Fermi level
    /// of its reference run.
    pub bound: RateBound,
}

/// Convergence study over `cfg.study.grids`; writes the study CSV with the
/// fits appended and, when `plot` is set and `plot_path` given, a gnuplot script.
pub fn cmd_study(
    cfg: &RunConfig,
    out: &mut dyn Write,
    plot_path: Option<&Path>,
) -> Result<StudyReport> {
    let sys = system(cfg)?;
    let study = run_study(
        &sys.basis,
        &sys.vlin,
        &StudyConfig {
            ls: cfg.study.grids.clone(),
            l_ref: cfg.study.reference,
            scf: cfg.scf.clone(),
        },
    )?;
    let energy_fit = fit_energy(&study.rows).ok();
    let density_fit = fit_density(&study.rows).ok();
    let bound = theoretical_rate(
        &sys.lattice,
        study.potential.sup_norm_refined(),
        study.reference.gap,
        study.reference.fermi,
    )?;
    let mut fits = Vec::new();
    if let Some(f) = &energy_fit {
        fits.push(LabelledFit {
            series: "energy",
            fit: f,
        });
    }
    if let Some(f) = &density_fit {
        fits.push(LabelledFit {
            series: "density",
            fit: f,
        });
    }
    write_study_csv(&study.rows, &fits, Some(bound.alpha), &mut *out)?;
    if cfg.study.plot {
        if let Some(path) = plot_path {
            write_plot_script(path, &study, energy_fit.as_ref(), density_fit.as_ref())?;
        }
    }
    Ok(StudyReport {
        study,
        energy_fit,
        density_fit,
        bound,
    })
}

/// Gnuplot script that plots the study CSV `data` next to it.
fn write_plot_script(
    data: &Path,
    study: &Study,
    energy: Option<&FitResult>,
    density: Option<&FitResult>,
) -> Result<()> {
    let script = data.with_extension("gp");
    let name = data
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut w = BufWriter::new(File::create(&script)?);
    writeln!(w, "set datafile separator ','")?;
    writeln!(w, "set logscale y")?;
    writeln!(w, "set xlabel 'L'")?;
    writeln!(w, "set key top right")?;
    writeln!(w, "set terminal pngcairo size 1000,450")?;
    writeln!(
        w,
        "set output '{}'",
        Path::new(&name).with_extension("png").display()
    )?;
    writeln!(w, "set multiplot layout 1,2")?;
    let line = |f: Option<&FitResult>, unit: f64| {
        f.map_or_else(String::new, |f| {
            format!(
                ", exp({} - {}*x) * {unit} title sprintf('fit, alpha = %.3f', {})",
                f.log_c_obs, f.alpha_obs, f.alpha_obs
            )
        })
    };
    writeln!(w, "set ylabel 'energy error (eV)'")?;
    writeln!(
        w,
        "plot '{name}' using 1:3 with linespoints title 'energy'{}",
        line(energy, hartree_to_ev(1.0))
    )?;
    writeln!(w, "set ylabel 'density error (L-inf)'")?;
    writeln!(
        w,
        "plot '{name}' using 1:4 with linespoints title 'density'{}",
        line(density, 1.0)
    )?;
    writeln!(w, "unset multiplot")?;
    writeln!(w, "# reference grid L = {}", study.l_ref)?;
    w.flush()?;
    Ok(())
}

/// Theoretical rate constants from the linear potential and a linear run on
/// `cfg.rate_grid`; printed as `name = value` lines.
pub fn cmd_rate_bound(cfg: &RunConfig, out: &mut dyn Write) -> Result<RateBound> {
    let sys = system(cfg)?;
    let grid = kgrid(sys.basis.rlat(), cfg.rate_grid)?;
    let run = scf(
        &sys.basis,
        &grid,
        &sys.vlin,
        &linear_cfg(&cfg.scf),
        &uniform_density(&sys.basis, cfg.scf.nocc),
    )?;
    let v_norm = sys.vlin.sup_norm_refined();
    let b = theoretical_rate(&sys.lattice, v_norm, run.gap, run.fermi)?;
    writeln!(
        out,
        "# inputs from the linear model on L = {}",
        cfg.rate_grid
    )?;
    for (name, value) in [
        ("v_norm_ha", b.v_norm),
        ("gap_ha", b.gap),
        ("fermi_ha", b.fermi),
        ("bz_radius", b.bz_radius),
        ("a3_star", b.a3_star),
        ("lattice_sum", b.lattice_sum),
        ("A", b.a),
        ("alpha", b.alpha),
        ("C0", b.c0),
        ("C1", b.c1),
        ("C2", b.c2),
        ("C3", b.c3),
        ("C4", b.c4),
        ("C5", b.c5),
        ("C6", b.c6),
    ] {
        writeln!(out, "{name} = {value:.12e}")?;
    }
    Ok(b)
}

/// Both sides of the aliasing identity for the exponential family
/// `c_R = kappa e^{-beta |R|_1}` on every configured grid, and a fit of the
/// quadrature error.
pub fn cmd_riemann(cfg: &RunConfig, out: &mut dyn Write) -> Result<RiemannReport> {
    let spec = FourierSpec::Exponential {
        kappa: cfg.riemann.kappa,
        beta: cfg.riemann.beta,
    };
    let report = riemann_report(&spec, &cfg.riemann.grids)?;
    writeln!(out, "L,lhs,rhs,abs_diff")?;
    for c in &report.checks {
        writeln!(
            out,
            "{},{:.17e},{:.17e},{:.3e}",
            c.l,
            c.lhs.re,
            c.rhs.re,
            c.discrepancy()
        )?;
    }
    writeln!(out, "# max_abs_diff={:.3e}", report.max_discrepancy)?;
    if let Some(f) = &report.fit {
        writeln!(
            out,
            "# alpha_obs={:.6}, r2={:.6}, beta={}, relative_deviation={:.4}",
            f.alpha_obs,
            f.r_squared,
            cfg.riemann.beta,
            (f.alpha_obs - cfg.riemann.beta).abs() / cfg.riemann.beta
        )?;
    }
    Ok(report)
}
