use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::fit::{fit_exponential, FitResult};
use crate::error::{Error, Result};
use crate::pwbasis::Miller;

/// Terms below this fraction of the leading one are left out of the series.
const SERIES_CUTOFF: f64 = 1e-20;

/// Fourier coefficients `c_R` of a function `f(q) = sum_R c_R e^{i R.q}`
/// periodic over the Brillouin cell, indexed by lattice coordinates of `R`.
#[derive(Debug, Clone, PartialEq)]
pub enum FourierSpec {
    Finite(BTreeMap<Miller, Complex64>),
    /// `c_R = kappa e^{-beta |R|_1}`.
    Exponential {
        kappa: f64,
        beta: f64,
    },
}

impl FourierSpec {
    fn validate(&self) -> Result<()> {
        match self {
            FourierSpec::Finite(_) => Ok(()),
            FourierSpec::Exponential { kappa, beta } => {
                if !(beta > &0.0) || !kappa.is_finite() {
                    Err(Error::InvalidArgument(format!(
                        "exponential family needs beta > 0 and finite kappa, got beta = {beta}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Quadrature error of the `L^3`-point Riemann sum and the alias sum it equals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannCheck {
    pub l: usize,
    /// `L^-3 sum_{Q in Lambda_L} f(Q) - c_0`.
    pub lhs: Complex64,
    /// `sum_{R != 0} c_{L R}`.
    pub rhs: Complex64,
}

impl RiemannCheck {
    pub fn discrepancy(&self) -> f64 {
        (self.lhs - self.rhs).norm()
    }
}

/// Evaluates both sides of the aliasing identity for one grid size.
///
/// The left side sums the trigonometric series at every grid point
/// `Q = (j_1, j_2, j_3) / L` in reciprocal-lattice coordinates and subtracts
/// the cell average `c_0`; the right side adds the coefficients on the
/// sublattice `L Z^3 \ {0}` directly.
pub fn riemann_check(spec: &FourierSpec, l: usize) -> Result<RiemannCheck> {
    spec.validate()?;
    if l == 0 {
        return Err(Error::InvalidArgument(
            "grid size must be at least 1".into(),
        ));
    }
    let (lhs, rhs) = match spec {
        FourierSpec::Finite(c) => (finite_lhs(c, l), finite_rhs(c, l)),
        FourierSpec::Exponential { kappa, beta } => {
            let (lhs, rhs) = exponential_sides(*kappa, *beta, l);
            (Complex64::new(lhs, 0.0), Complex64::new(rhs, 0.0))
        }
    };
    Ok(RiemannCheck { l, lhs, rhs })
}

fn phase(m: &Miller, j: [usize; 3], l: usize) -> Complex64 {
    let mut t: i64 = 0;
    for a in 0..3 {
        t += m[a] as i64 * j[a] as i64;
    }
    let frac = t.rem_euclid(l as i64) as f64 / l as f64;
    Complex64::from_polar(1.0, 2.0 * PI * frac)
}

fn finite_lhs(c: &BTreeMap<Miller, Complex64>, l: usize) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for j1 in 0..l {
        for j2 in 0..l {
            for j3 in 0..l {
                let j = [j1, j2, j3];
                total += c
                    .iter()
                    .map(|(m, cm)| cm * phase(m, j, l))
                    .sum::<Complex64>();
            }
        }
    }
    let c0 = c.get(&[0, 0, 0]).copied().unwrap_or_default();
    total / (l * l * l) as f64 - c0
}

fn finite_rhs(c: &BTreeMap<Miller, Complex64>, l: usize) -> Complex64 {
    let li = l as i32;
    c.iter()
        .filter(|(m, _)| **m != [0, 0, 0] && m.iter().all(|x| x.rem_euclid(li) == 0))
        .map(|(_, v)| *v)
        .sum()
}

/// Truncation index `N` of the one-dimensional series `sum_{|n| <= N} e^{-beta |n|}`.
fn series_extent(beta: f64) -> i64 {
    (-SERIES_CUTOFF.ln() / beta).ceil() as i64
}

/// The function factorises as `kappa g(x_1) g(x_2) g(x_3)` with
/// `g(x) = sum_n e^{-beta |n|} e^{2 pi i n x}`. Each factor is summed from its
/// truncated series at the `L` grid abscissae.
fn exponential_sides(kappa: f64, beta: f64, l: usize) -> (f64, f64) {
    let n_max = series_extent(beta);
    let g: Vec<f64> = (0..l)
        .map(|j| {
            let x = j as f64 / l as f64;
            let mut s = 1.0;
            // Smallest terms first.
            for n in (1..=n_max).rev() {
                s += 2.0 * (-beta * n as f64).exp() * (2.0 * PI * n as f64 * x).cos();
            }
            s
        })
        .collect();
    let mut total = 0.0;
    for a in &g {
        for b in &g {
            for c in &g {
                total += a * b * c;
            }
        }
    }
    let lhs = kappa * (total / (l * l * l) as f64 - 1.0);

    // sum over m in Z^3 \ {0} of e^{-beta L |m|_1} = h^3 - 1 with
    // h = sum_m e^{-beta L |m|}.
    let m_max = n_max / l as i64 + 1;
    let mut h = 0.0;
    for m in (1..=m_max).rev() {
        h += 2.0 * (-beta * (l as i64 * m) as f64).exp();
    }
    let h3_minus_1 = h * h * h + 3.0 * h * h + 3.0 * h;
    (lhs, kappa * h3_minus_1)
}

/// Both sides for every grid size, with a log-linear fit of `|lhs|`.
#[derive(Debug, Clone)]
pub struct RiemannReport {
    pub checks: Vec<RiemannCheck>,
    pub max_discrepancy: f64,
    pub fit: Option<FitResult>,
}

pub fn riemann_report(spec: &FourierSpec, ls: &[usize]) -> Result<RiemannReport> {
    let checks = ls
        .iter()
        .map(|&l| riemann_check(spec, l))
        .collect::<Result<Vec<_>>>()?;
    let max_discrepancy = checks.iter().map(|c| c.discrepancy()).fold(0.0, f64::max);
    let points: Vec<(usize, f64)> = checks.iter().map(|c| (c.l, c.lhs.norm())).collect();
    let fit = fit_exponential(&points).ok();
    Ok(RiemannReport {
        checks,
        max_discrepancy,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// `kappa (coth^3(beta L / 2) - 1)`: the geometric alias tail in closed form.
    /// Written through `coth x = 1 + eps`, `eps = 2 / (e^{2x} - 1)`, to avoid cancellation.
    fn coth_oracle(kappa: f64, beta: f64, l: usize) -> f64 {
        let eps = 2.0 / (beta * l as f64).exp_m1();
        kappa * (3.0 * eps + 3.0 * eps * eps + eps * eps * eps)
    }

    #[test]
    fn constant_function_is_integrated_exactly() {
        let spec = FourierSpec::Finite([([0, 0, 0], Complex64::new(2.5, -1.0))].into());
        for l in 1..6 {
            let r = riemann_check(&spec, l).unwrap();
            assert!(r.lhs.norm() < 1e-14);
            assert_eq!(r.rhs, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn smallest_alias() {
        let c1 = Complex64::new(0.3, 0.0);
        let spec = FourierSpec::Finite(
            [
                ([0, 0, 0], Complex64::new(1.0, 0.0)),
                ([1, 0, 0], c1),
                ([-1, 0, 0], c1),
            ]
            .into(),
        );
        let r1 = riemann_check(&spec, 1).unwrap();
        assert_abs_diff_eq!(r1.lhs.re, 2.0 * c1.re, epsilon = 1e-14);
        assert_abs_diff_eq!(r1.rhs.re, 2.0 * c1.re, epsilon = 1e-15);
        for l in 2..8 {
            let r = riemann_check(&spec, l).unwrap();
            assert!(r.lhs.norm() < 1e-14, "L = {l}: {}", r.lhs);
            assert_eq!(r.rhs.norm(), 0.0);
        }
    }

    #[test]
    fn exponential_family_matches_closed_form() {
        for l in 1..=10 {
            let r = riemann_check(
                &FourierSpec::Exponential {
                    kappa: 1.0,
                    beta: 0.5,
                },
                l,
            )
            .unwrap();
            let oracle = coth_oracle(1.0, 0.5, l);
            assert!(
                (r.lhs.re - oracle).abs() < 1e-12,
                "L = {l}: {} vs {oracle}",
                r.lhs.re
            );
            assert!(
                (r.rhs.re - oracle).abs() < 1e-12,
                "L = {l}: {} vs {oracle}",
                r.rhs.re
            );
        }
    }

    #[test]
    fn closed_form_decays_at_rate_beta_asymptotically() {
        // coth^3(x) - 1 ~ 6 e^{-2x}: the local slope tends to beta only for beta L >> 1.
        let local = |l: usize| (coth_oracle(1.0, 0.5, l) / coth_oracle(1.0, 0.5, l + 1)).ln();
        assert!((local(60) - 0.5).abs() < 1e-6);
        assert!(local(4) > 0.55);
    }

    #[test]
    fn report_fits_the_decay() {
        let spec = FourierSpec::Exponential {
            kappa: 1.0,
            beta: 2.0,
        };
        let rep = riemann_report(&spec, &[2, 3, 4, 5, 6]).unwrap();
        assert!(rep.max_discrepancy < 1e-12);
        let fit = rep.fit.unwrap();
        assert!(
            (fit.alpha_obs - 2.0).abs() < 0.02 * 2.0,
            "{}",
            fit.alpha_obs
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(riemann_check(
            &FourierSpec::Exponential {
                kappa: 1.0,
                beta: 0.0
            },
            3
        )
        .is_err());
        assert!(riemann_check(&FourierSpec::Finite(BTreeMap::new()), 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn identity_holds_for_random_finite_spectra(
            entries in proptest::collection::vec(((-7i32..8, -7i32..8, -7i32..8), -1.0f64..1.0, -1.0f64..1.0), 1..20),
            l in 1usize..7,
        ) {
            let spec = FourierSpec::Finite(
                entries.iter().map(|((a, b, c), re, im)| ([*a, *b, *c], Complex64::new(*re, *im))).collect(),
            );
            let r = riemann_check(&spec, l).unwrap();
            prop_assert!(r.discrepancy() < 1e-12);
        }
    }
}
