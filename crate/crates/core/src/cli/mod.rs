//! Command-line front end: argument parsing, configuration, the five
//! subcommands and their exit codes.

mod commands;
mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use log::warn;

use crate::error::Error;

pub use commands::{
    cmd_bands, cmd_rate_bound, cmd_riemann, cmd_scf, cmd_study, system, StudyReport, System,
};
pub use config::{
    BandsSection, InitDensity, LatticeSpec, PotentialSpec, Preset, RiemannSection, RunConfig,
    StudySection, SILICON_A,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;
pub const EXIT_METALLIC: u8 = 4;
pub const EXIT_NUMERICAL: u8 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "periodic-rhf",
    version,
    about = "Plane-wave Brillouin-zone sampling for linear and rHF crystal models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Configuration file applied on top of the preset.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads; overrides [run] threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file; overrides [run] out. Standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Base parameter set: si-fcc-desk or si-fcc-paper.
    #[arg(long, global = true, default_value = "si-fcc-desk")]
    pub preset: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Eigenvalues at the configured quasi-momenta.
    Bands,
    /// One self-consistent run with its iteration log.
    Scf,
    /// Convergence study over grid sizes.
    Study,
    /// Theoretical rate constants.
    RateBound,
    /// Exact aliasing identity for Riemann sums.
    RiemannCheck,
}

/// Exit code for a failure.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Study { source, .. } => exit_code(source),
        Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
        Error::Metallic { .. } => EXIT_METALLIC,
        Error::Parse(_)
        | Error::InvalidArgument(_)
        | Error::Io(_)
        | Error::DegenerateLattice { .. }
        | Error::BasisTooLarge { .. } => EXIT_CONFIG,
        Error::NotNeutral { .. } | Error::Eigensolver(_) | Error::InsufficientData { .. } => {
            EXIT_NUMERICAL
        }
    }
}

/// Resolves preset, file and flags into one configuration.
pub fn resolve(cli: &Cli) -> crate::Result<RunConfig> {
    let mut cfg = RunConfig::preset(Preset::parse(&cli.preset)?);
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply(&text)?;
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one parsed command line.
pub fn run(cli: &Cli) -> crate::Result<()> {
    let cfg = resolve(cli)?;
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            warn!("thread pool already set up, keeping it: {e}");
        }
    }
    let mut out: Box<dyn Write> = match &cfg.out {
        Some(path) => {
            Box::new(BufWriter::new(File::create(path).map_err(|e| {
                Error::Parse(format!("cannot create {}: {e}", path.display()))
            })?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match cli.command {
        Command::Bands => {
            cmd_bands(&cfg, &mut out)?;
        }
        Command::Scf => {
            let r = cmd_scf(&cfg, &mut out)?;
            eprintln!(
                "converged in {} iterations: energy {:.12} Ha, gap {:.6} Ha, residual {:.3e}",
                r.iterations, r.energy_per_cell, r.gap, r.residual
            );
        }
        Command::Study => {
            let r = cmd_study(&cfg, &mut out, cfg.out.as_deref())?;
            for (name, fit) in [("energy", &r.energy_fit), ("density", &r.density_fit)] {
                if let Some(f) = fit {
                    eprintln!(
                        "{name}: alpha_obs {:.4}, r2 {:.4}, alpha_theory {:.3e}",
                        f.alpha_obs, f.r_squared, r.bound.alpha
                    );
                }
            }
        }
        Command::RateBound => {
            cmd_rate_bound(&cfg, &mut out)?;
        }
        Command::RiemannCheck => {
            cmd_riemann(&cfg, &mut out)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
