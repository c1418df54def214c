use thiserror::Error;

/// Failure modes shared by every stage of the kernel.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate lattice: |det| = {det:e}")]
    DegenerateLattice { det: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("plane-wave basis would hold {requested} vectors, above the cap of {cap}")]
    BasisTooLarge { requested: usize, cap: usize },

    #[error("function is not neutral: c_0 = {c0:e} exceeds tolerance {tolerance:e}")]
    NotNeutral { c0: f64, tolerance: f64 },

    #[error(
        "gap {gap:e} Ha at or below tolerance {tolerance:e} Ha (homo {homo:.8}, lumo {lumo:.8})"
    )]
    Metallic {
        gap: f64,
        tolerance: f64,
        homo: f64,
        lumo: f64,
    },

    #[error("SCF did not converge in {iterations} iterations (last L-inf residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("insufficient data for fit: {usable} usable rows, need at least 3")]
    InsufficientData { usable: usize },

    #[error("study failed at L = {l}: {source}")]
    Study {
        l: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
