use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice::{Lattice, Vec3};

/// Relative accuracy of the reciprocal lattice sum.
const LATTICE_SUM_TOLERANCE: f64 = 1e-12;

/// Constants of the a priori exponential bounds, with the inputs they were
/// computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBound {
    /// Half-width of the analyticity strip `R^3 + i [-A, A]^3`.
    pub a: f64,
    pub alpha: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    /// `sum_{k in R*} (1 + |k|^2)^-2`.
    pub lattice_sum: f64,
    pub v_norm: f64,
    pub gap: f64,
    pub fermi: f64,
    pub bz_radius: f64,
    /// Length of the longest reciprocal basis vector.
    pub a3_star: f64,
}

/// `alpha = (2/3) pi A / |a3*|` and `C_0 = 2 (3 + e^{-2 alpha}) / (1 - e^{-alpha})^3`.
pub fn riemann_constants(a: f64, a3_star: f64) -> (f64, f64) {
    let alpha = 2.0 / 3.0 * PI * a / a3_star;
    let c0 = 2.0 * (3.0 + (-2.0 * alpha).exp()) / (1.0 - (-alpha).exp()).powi(3);
    (alpha, c0)
}

/// `C_1 = 4 + (2 + 4 |Gamma*|^2 + 8 |V| + 8 eps_F) / min(1, g)`.
pub fn c1_constant(bz_radius: f64, v_norm: f64, fermi: f64, gap: f64) -> f64 {
    4.0 + (2.0 + 4.0 * bz_radius * bz_radius + 8.0 * v_norm + 8.0 * fermi) / gap.min(1.0)
}

/// Evaluates every constant of the bound for a lattice, a potential of sup
/// norm `v_norm`, and a gap `gap` around the Fermi level `fermi`.
pub fn theoretical_rate(lat: &Lattice, v_norm: f64, gap: f64, fermi: f64) -> Result<RateBound> {
    if !(gap > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "the bound needs a positive gap, got {gap}"
        )));
    }
    if !(v_norm >= 0.0) || !fermi.is_finite() {
        return Err(Error::InvalidArgument(
            "potential norm must be nonnegative and the Fermi level finite".into(),
        ));
    }
    let rlat = lat.reciprocal()?;
    let bz = rlat.bz_radius();
    let a3_star = rlat.sorted_lengths()[2];
    let c1 = c1_constant(bz, v_norm, fermi, gap);
    let a = (1.0 / (2.0 * c1 * (1.0 + bz))).min(1.0);
    let (alpha, c0) = riemann_constants(a, a3_star);
    let c2 = 2.0 * c1;
    let c3 = c1 * (3.0 + fermi + v_norm) / PI;
    let lattice_sum = reciprocal_lattice_sum(lat);
    let c4 = c1 * c1 * lattice_sum;
    let c5 = (bz + a + 0.5).powi(2) * c3 * c3 * c4;
    let c6 = c3 * c3 * lattice_sum;
    Ok(RateBound {
        a,
        alpha,
        c0,
        c1,
        c2,
        c3,
        c4,
        c5,
        c6,
        lattice_sum,
        v_norm,
        gap,
        fermi,
        bz_radius: bz,
        a3_star,
    })
}

/// Largest distance from the centre of the direct cell to one of its corners.
fn direct_circumradius(lat: &Lattice) -> f64 {
    let [a1, a2, a3] = lat.vectors();
    let mut r: f64 = 0.0;
    for s1 in [-0.5, 0.5] {
        for s2 in [-0.5, 0.5] {
            for s3 in [-0.5, 0.5] {
                r = r.max((a1 * s1 + a2 * s2 + a3 * s3).norm());
            }
        }
    }
    r
}

/// Upper bound on `sum_{|R| > rho} e^{-|R|}` over the direct lattice.
///
/// Every `R` owns the translated cell `R + Gamma`, whose points satisfy
/// `|R| - d <= |x| <= |R| + d` with `d` the circumradius. Hence
/// `e^{-|R|} <= |Gamma|^-1 int_{R + Gamma} e^{-(|x| - d)} dx`, and the cells of
/// the lattice points beyond `rho` cover at most `|x| > rho - d`, so the tail is
/// at most `4 pi |Gamma|^-1 int_{rho - d}^inf e^{-(r - d)} r^2 dr`
/// `= 4 pi |Gamma|^-1 e^{-s} ((s + d)^2 + 2 (s + d) + 2)` with `s = rho - 2 d`.
pub fn real_space_tail_bound(lat: &Lattice, rho: f64) -> f64 {
    let d = direct_circumradius(lat);
    let s = rho - 2.0 * d;
    if s < 0.0 {
        return f64::INFINITY;
    }
    let t = s + d;
    4.0 * PI / lat.volume() * (-s).exp() * (t * t + 2.0 * t + 2.0)
}

/// `sum_{k in R*} (1 + |k|^2)^-2`, evaluated through its Poisson dual
/// `pi^2 |Gamma*|^-1 sum_{R in R} e^{-|R|}` (the three-dimensional Fourier
/// transform of `(1 + |x|^2)^-2` is `pi^2 e^{-|k|}`). The direct-space terms
/// decay exponentially; shells are added until the bound of
/// [`real_space_tail_bound`] drops below the target relative accuracy.
pub fn reciprocal_lattice_sum(lat: &Lattice) -> f64 {
    let recip_volume = (2.0 * PI).powi(3) / lat.volume();
    let sigma_min = lat
        .matrix()
        .singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let mut rho = 2.0 * direct_circumradius(lat) + 40.0;
    loop {
        let bound = (rho / sigma_min).ceil() as i64;
        let mut partial = 0.0;
        for n1 in -bound..=bound {
            for n2 in -bound..=bound {
                for n3 in -bound..=bound {
                    let r = lat.point([n1, n2, n3]).norm();
                    if r <= rho {
                        partial += (-r).exp();
                    }
                }
            }
        }
        if real_space_tail_bound(lat, rho) < LATTICE_SUM_TOLERANCE * partial {
            return PI * PI / recip_volume * partial;
        }
        rho += 10.0;
    }
}

/// Direct partial sum `sum_{|k| <= radius} (1 + |k|^2)^-2` over the
/// reciprocal lattice; slow to converge, kept for cross-checks.
pub fn reciprocal_partial_sum(lat: &Lattice, radius: f64) -> Result<f64> {
    let rlat = lat.reciprocal()?;
    let sigma_min = rlat
        .matrix()
        .singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let bound = (radius / sigma_min).ceil() as i32;
    let mut sum = 0.0;
    for m1 in -bound..=bound {
        for m2 in -bound..=bound {
            for m3 in -bound..=bound {
                let k: Vec3 = rlat.point([m1, m2, m3]);
                let k2 = k.norm_squared();
                if k2 <= radius * radius {
                    sum += 1.0 / ((1.0 + k2) * (1.0 + k2));
                }
            }
        }
    }
    Ok(sum)
}
