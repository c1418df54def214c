//! Convergence studies over grid sizes, exponential rate fits, the a priori
//! rate constants and the exact aliasing identity for Riemann sums.

mod fit;
mod rate;
mod riemann;
mod study;

pub use fit::{fit_exponential, FitResult, MIN_FIT_POINTS};
pub use rate::{
    c1_constant, real_space_tail_bound, reciprocal_lattice_sum, reciprocal_partial_sum,
    riemann_constants, theoretical_rate, RateBound,
};
pub use riemann::{riemann_check, riemann_report, FourierSpec, RiemannCheck, RiemannReport};
pub use study::{run_study, write_study_csv, LabelledFit, Study, StudyConfig, StudyRow};

/// Fits the energy errors of a study.
pub fn fit_energy(rows: &[StudyRow]) -> crate::Result<FitResult> {
    fit_exponential(
        &rows
            .iter()
            .map(|r| (r.l, r.energy_error))
            .collect::<Vec<_>>(),
    )
}

/// Fits the density errors of a study.
pub fn fit_density(rows: &[StudyRow]) -> crate::Result<FitResult> {
    fit_exponential(
        &rows
            .iter()
            .map(|r| (r.l, r.density_error_inf))
            .collect::<Vec<_>>(),
    )
}
