//! Run configuration: presets and the `key = value` file format.
//!
//! Grammar, one statement per line:
//!
//! ```text
//! line    := blank | comment | section | entry
//! comment := ("#" | ";") text
//! section := "[" name "]"
//! entry   := key "=" value [comment]
//! ```
//!
//! Every entry belongs to a section. Keys are lower-case identifiers; values
//! are taken verbatim after trimming. Lists are comma or whitespace separated;
//! the `q` list of `[bands]` separates points with `;`. Energies carry a unit
//! suffix, `eV` or `Ha`. Unknown sections and keys are errors, and so is a key
//! repeated within one file.

use std::collections::BTreeSet;
use std::path::PathBuf;

use crate::bloch::EigenMethod;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::rhf::{Model, SCFConfig};
use crate::units::ev_to_hartree;

/// Silicon cubic lattice constant, Bohr.
pub const SILICON_A: f64 = 10.245;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 180 eV, L in {4, 6, 8, 10, 12}, reference L = 24.
    SiFccDesk,
    /// 736 eV, L in {4, 6, ..., 28}, reference L = 60.
    SiFccPaper,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "si-fcc-desk" => Ok(Preset::SiFccDesk),
            "si-fcc-paper" => Ok(Preset::SiFccPaper),
            other => Err(Error::Parse(format!("unknown preset '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LatticeSpec {
    /// Face-centred cubic with cubic constant `a`, Bohr.
    SiFcc { a: f64 },
    /// Rows are the direct lattice vectors, Bohr.
    Explicit([[f64; 3]; 3]),
}

impl LatticeSpec {
    pub fn build(&self) -> Result<Lattice> {
        match self {
            LatticeSpec::SiFcc { a } => Lattice::fcc(*a),
            LatticeSpec::Explicit(rows) => Lattice::from_rows(*rows),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialSpec {
    CohenBergstresser,
    Zero,
}

/// Starting density of `scf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitDensity {
    Uniform,
    /// Linear-model density on the same grid.
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySection {
    pub grids: Vec<usize>,
    pub reference: usize,
    pub plot: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandsSection {
    /// Quasi-momenta in reciprocal-lattice coordinates.
    pub q: Vec<[f64; 3]>,
    /// Defaults to `nocc + 1`.
    pub nbands: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiemannSection {
    pub kappa: f64,
    pub beta: f64,
    pub grids: Vec<usize>,
}

/// Fully resolved configuration. Energies in Hartree.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub lattice: LatticeSpec,
    pub ecutoff: f64,
    pub potential: PotentialSpec,
    /// Grid of the single-grid `scf` run.
    pub grid: usize,
    /// Grid of the linear run whose density defines the rHF pseudopotential
    /// of `scf`; defaults to `grid`.
    pub hf_grid: Option<usize>,
    pub init: InitDensity,
    pub scf: SCFConfig,
    pub checkpoint: Option<PathBuf>,
    pub study: StudySection,
    pub bands: BandsSection,
    /// Grid of the linear run that supplies the gap and Fermi level of `rate-bound`.
    pub rate_grid: usize,
    pub riemann: RiemannSection,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn preset(p: Preset) -> Self {
        let (ecut_ev, grids, reference) = match p {
            Preset::SiFccDesk => (180.0, vec![4, 6, 8, 10, 12], 24),
            Preset::SiFccPaper => (736.0, (4..=28).step_by(2).collect(), 60),
        };
        Self {
            lattice: LatticeSpec::SiFcc { a: SILICON_A },
            ecutoff: ev_to_hartree(ecut_ev),
            potential: PotentialSpec::CohenBergstresser,
            grid: 8,
            hf_grid: None,
            init: InitDensity::Linear,
            scf: SCFConfig::default(),
            checkpoint: None,
            study: StudySection {
                grids,
                reference,
                plot: false,
            },
            bands: BandsSection {
                q: vec![[0.0, 0.0, 0.0]],
                nbands: None,
            },
            rate_grid: 8,
            riemann: RiemannSection {
                kappa: 1.0,
                beta: 0.5,
                grids: (1..=10).collect(),
            },
            threads: None,
            out: None,
        }
    }

    /// Applies the entries of a configuration file on top of `self`.
    pub fn apply(&mut self, text: &str) -> Result<()> {
        let mut section: Option<String> = None;
        let mut seen = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| parse_err(lineno, "unterminated section header"))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(parse_err(lineno, &format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(lineno, "expected 'key = value'"))?;
            let key = key.trim();
            let value = value.trim();
            let sec = section
                .as_deref()
                .ok_or_else(|| parse_err(lineno, &format!("'{key}' appears before any section")))?;
            if !seen.insert((sec.to_string(), key.to_string())) {
                return Err(parse_err(lineno, &format!("[{sec}] {key} is set twice")));
            }
            self.set(sec, key, value)
                .map_err(|e| parse_err(lineno, &format!("[{sec}] {key}: {}", strip_prefix(e))))?;
        }
        self.validate()
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> Result<()> {
        match (section, key) {
            ("system", "lattice") => match v {
                "si-fcc" => {
                    if !matches!(self.lattice, LatticeSpec::SiFcc { .. }) {
                        self.lattice = LatticeSpec::SiFcc { a: SILICON_A };
                    }
                }
                "explicit" => {
                    if !matches!(self.lattice, LatticeSpec::Explicit(_)) {
                        self.lattice = LatticeSpec::Explicit([[0.0; 3]; 3]);
                    }
                }
                other => return Err(Error::Parse(format!("unknown lattice '{other}'"))),
            },
            ("system", "a") => {
                let a = float(v)?;
                match &mut self.lattice {
                    LatticeSpec::SiFcc { a: current } => *current = a,
                    LatticeSpec::Explicit(_) => {
                        return Err(Error::Parse(
                            "'a' applies to the si-fcc lattice only".into(),
                        ))
                    }
                }
            }
            ("system", "vectors") => {
                let xs = floats(v)?;
                if xs.len() != 9 {
                    return Err(Error::Parse(format!(
                        "expected 9 numbers, got {}",
                        xs.len()
                    )));
                }
                let mut rows = [[0.0; 3]; 3];
                for (i, x) in xs.iter().enumerate() {
                    rows[i / 3][i % 3] = *x;
                }
                self.lattice = LatticeSpec::Explicit(rows);
            }
            ("system", "ecutoff") => self.ecutoff = energy(v)?,
            ("system", "nocc") => self.scf.nocc = integer(v)?,
            ("system", "potential") => {
                self.potential = match v {
                    "cohen-bergstresser" => PotentialSpec::CohenBergstresser,
                    "zero" => PotentialSpec::Zero,
                    other => return Err(Error::Parse(format!("unknown potential '{other}'"))),
                }
            }
            ("scf", "model") => {
                self.scf.model = match v {
                    "linear" => Model::Linear,
                    "rhf" => Model::Rhf,
                    other => return Err(Error::Parse(format!("unknown model '{other}'"))),
                }
            }
            ("scf", "grid") => self.grid = integer(v)?,
            ("scf", "hf_grid") => self.hf_grid = Some(integer(v)?),
            ("scf", "init") => {
                self.init = match v {
                    "uniform" => InitDensity::Uniform,
                    "linear" => InitDensity::Linear,
                    other => {
                        return Err(Error::Parse(format!("unknown initial density '{other}'")))
                    }
                }
            }
            ("scf", "mixing") => self.scf.mixing = float(v)?,
            ("scf", "tol_density") => self.scf.tol_density = float(v)?,
            ("scf", "max_iter") => self.scf.max_iter = integer(v)?,
            ("scf", "anderson_depth") => self.scf.anderson_depth = integer(v)?,
            ("scf", "gap_tolerance") => self.scf.gap_tolerance = energy(v)?,
            ("scf", "eigensolver") => {
                self.scf.eigen.method = match v {
                    "auto" => EigenMethod::Auto,
                    "dense" => EigenMethod::Dense,
                    "lobpcg" => EigenMethod::Iterative,
                    other => return Err(Error::Parse(format!("unknown eigensolver '{other}'"))),
                }
            }
            ("scf", "eigen_tol") => self.scf.eigen.tolerance = float(v)?,
            ("scf", "checkpoint") => self.checkpoint = Some(PathBuf::from(v)),
            ("study", "grids") => self.study.grids = integers(v)?,
            ("study", "reference") => self.study.reference = integer(v)?,
            ("study", "plot") => self.study.plot = boolean(v)?,
            ("bands", "q") => {
                self.bands.q = v
                    .split(';')
                    .map(|p| {
                        let xs = floats(p)?;
                        <[f64; 3]>::try_from(xs.as_slice()).map_err(|_| {
                            Error::Parse(format!("q point '{}' needs 3 numbers", p.trim()))
                        })
                    })
                    .collect::<Result<_>>()?
            }
            ("bands", "nbands") => self.bands.nbands = Some(integer(v)?),
            ("rate", "grid") => self.rate_grid = integer(v)?,
            ("riemann", "kappa") => self.riemann.kappa = float(v)?,
            ("riemann", "beta") => self.riemann.beta = float(v)?,
            ("riemann", "grids") => self.riemann.grids = integers(v)?,
            ("run", "threads") => self.threads = Some(integer(v)?),
            ("run", "out") => self.out = Some(PathBuf::from(v)),
            _ => return Err(Error::Parse(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.lattice
            .build()
            .map_err(|e| Error::Parse(strip_prefix(e)))?;
        if !(self.ecutoff > 0.0) {
            return Err(Error::Parse("ecutoff must be positive".into()));
        }
        if self.potential == PotentialSpec::CohenBergstresser
            && !matches!(self.lattice, LatticeSpec::SiFcc { .. })
        {
            return Err(Error::Parse(
                "the cohen-bergstresser potential needs the si-fcc lattice".into(),
            ));
        }
        self.scf
            .validate()
            .map_err(|e| Error::Parse(strip_prefix(e)))?;
        let positive = |name: &str, l: usize| {
            if l == 0 {
                Err(Error::Parse(format!("{name} must be at least 1")))
            } else {
                Ok(())
            }
        };
        positive("scf grid", self.grid)?;
        positive("rate grid", self.rate_grid)?;
        positive("study reference", self.study.reference)?;
        if let Some(l) = self.hf_grid {
            positive("hf_grid", l)?;
        }
        if self.study.grids.is_empty() || self.study.grids.contains(&0) {
            return Err(Error::Parse(
                "study grids must be positive and nonempty".into(),
            ));
        }
        if self.riemann.grids.is_empty() || self.riemann.grids.contains(&0) {
            return Err(Error::Parse(
                "riemann grids must be positive and nonempty".into(),
            ));
        }
        if self.threads == Some(0) {
            return Err(Error::Parse("threads must be at least 1".into()));
        }
        if self.bands.nbands == Some(0) || self.bands.q.is_empty() {
            return Err(Error::Parse(
                "bands need at least one q point and one band".into(),
            ));
        }
        Ok(())
    }
}

const SECTIONS: [&str; 7] = ["system", "scf", "study", "bands", "rate", "riemann", "run"];

fn strip_comment(line: &str) -> &str {
    // ';' also separates q points, so it opens a comment only at line start.
    let line = line.find('#').map_or(line, |i| &line[..i]);
    if line.trim_start().starts_with(';') {
        ""
    } else {
        line
    }
}

fn parse_err(lineno: usize, msg: &str) -> Error {
    Error::Parse(format!("line {lineno}: {msg}"))
}

/// Message of an error without the variant's own prefix.
fn strip_prefix(e: Error) -> String {
    match e {
        Error::Parse(m) | Error::InvalidArgument(m) => m,
        other => other.to_string(),
    }
}

fn float(v: &str) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Parse(format!("'{v}' is not a finite number")))
}

fn floats(v: &str) -> Result<Vec<f64>> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(float)
        .collect()
}

fn integer(v: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| Error::Parse(format!("'{v}' is not a nonnegative integer")))
}

fn integers(v: &str) -> Result<Vec<usize>> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(integer)
        .collect()
}

fn boolean(v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::Parse(format!("'{other}' is not a boolean"))),
    }
}

/// Energy with a unit suffix, returned in Hartree.
fn energy(v: &str) -> Result<f64> {
    let lower = v.to_ascii_lowercase();
    let (number, to_ha): (&str, fn(f64) -> f64) = if let Some(n) = lower.strip_suffix("ev") {
        (n, ev_to_hartree)
    } else if let Some(n) = lower.strip_suffix("ha") {
        (n, |x| x)
    } else {
        return Err(Error::Parse(format!(
            "energy '{v}' needs an eV or Ha suffix"
        )));
    };
    Ok(to_ha(float(number.trim())?))
}
