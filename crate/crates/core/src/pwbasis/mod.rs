//! Plane-wave basis under a kinetic-energy cutoff, and the Fourier container
//! for lattice-periodic functions.

mod function;
mod io;

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{ReciprocalLattice, Vec3};

pub use function::{eval_on_grid, sup_norm, Miller, PeriodicFunction, REAL_SYMMETRY_TOLERANCE};
pub(crate) use function::{neg, sub};
pub use io::{read_periodic_function, write_periodic_function};

/// Default ceiling on the number of plane waves.
pub const DEFAULT_BASIS_CAP: usize = 200_000;

/// `{ G in R* : |G|^2 / 2 < ecutoff }` in lexicographic Miller order.
#[derive(Debug)]
pub struct PlaneWaveBasis {
    rlat: ReciprocalLattice,
    ecutoff: f64,
    millers: Vec<Miller>,
    gvecs: Vec<Vec3>,
    index: HashMap<Miller, usize>,
    differences: OnceLock<DifferenceTable>,
}

/// Every difference `m_i - m_j` of basis vectors, and the pair -> difference map.
#[derive(Debug)]
pub struct DifferenceTable {
    pub millers: Vec<Miller>,
    /// `pair[i * n + j]` indexes `millers` at `m_i - m_j`.
    pub pair: Vec<u32>,
}

pub fn build_basis(rlat: &ReciprocalLattice, ecutoff: f64) -> Result<PlaneWaveBasis> {
    build_basis_with_cap(rlat, ecutoff, DEFAULT_BASIS_CAP)
}

pub fn build_basis_with_cap(
    rlat: &ReciprocalLattice,
    ecutoff: f64,
    cap: usize,
) -> Result<PlaneWaveBasis> {
    if !(ecutoff > 0.0) || !ecutoff.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "cutoff must be positive, got {ecutoff}"
        )));
    }
    // |sum m_i b_i| >= sigma_min |m|_2, so |m_i| <= sqrt(2 E) / sigma_min.
    let sigma_min = rlat
        .matrix()
        .singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let bound = ((2.0 * ecutoff).sqrt() / sigma_min).ceil() as i64;
    let side = 2 * bound + 1;
    if side.saturating_pow(3) > 64 * cap as i64 {
        return Err(Error::BasisTooLarge {
            requested: side.saturating_pow(3) as usize,
            cap,
        });
    }
    let bound = bound as i32;
    let mut millers = Vec::new();
    let mut gvecs = Vec::new();
    for m1 in -bound..=bound {
        for m2 in -bound..=bound {
            for m3 in -bound..=bound {
                let g = rlat.point([m1, m2, m3]);
                if 0.5 * g.norm_squared() < ecutoff {
                    if millers.len() == cap {
                        return Err(Error::BasisTooLarge {
                            requested: cap + 1,
                            cap,
                        });
                    }
                    millers.push([m1, m2, m3]);
                    gvecs.push(g);
                }
            }
        }
    }
    let index = millers.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    Ok(PlaneWaveBasis {
        rlat: rlat.clone(),
        ecutoff,
        millers,
        gvecs,
        index,
        differences: OnceLock::new(),
    })
}

impl PlaneWaveBasis {
    pub fn rlat(&self) -> &ReciprocalLattice {
        &self.rlat
    }

    pub fn ecutoff(&self) -> f64 {
        self.ecutoff
    }

    pub fn len(&self) -> usize {
        self.millers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.millers.is_empty()
    }

    pub fn millers(&self) -> &[Miller] {
        &self.millers
    }

    pub fn gvecs(&self) -> &[Vec3] {
        &self.gvecs
    }

    pub fn position(&self, m: Miller) -> Option<usize> {
        self.index.get(&m).copied()
    }

    /// Lazily built table of pairwise differences.
    pub fn differences(&self) -> &DifferenceTable {
        self.differences.get_or_init(|| {
            let n = self.len();
            let mut lookup: HashMap<Miller, u32> = HashMap::new();
            let mut millers = Vec::new();
            let mut pair = Vec::with_capacity(n * n);
            for mi in &self.millers {
                for mj in &self.millers {
                    let d = sub(*mi, *mj);
                    let next = millers.len() as u32;
                    let idx = *lookup.entry(d).or_insert_with(|| {
                        millers.push(d);
                        next
                    });
                    pair.push(idx);
                }
            }
            DifferenceTable { millers, pair }
        })
    }

    /// Density of the orbital `u = |cell|^-1/2 sum_G c_G e^{iG.x}`, see [`autocorrelate`].
    pub fn autocorrelate(&self, c: &[Complex64]) -> PeriodicFunction {
        autocorrelate(self, c)
    }
}

/// `g_k = |cell|^-1 sum_G conj(c_G) c_{G+k}`: the Fourier coefficients of
/// `|u|^2` for the unit-normalised orbital with plane-wave coefficients `c`.
///
/// The result is made exactly Hermitian-symmetric by computing one half of
/// the support and mirroring it.
pub fn autocorrelate(basis: &PlaneWaveBasis, c: &[Complex64]) -> PeriodicFunction {
    assert_eq!(
        c.len(),
        basis.len(),
        "coefficient vector does not match basis"
    );
    let mut acc: BTreeMap<Miller, Complex64> = BTreeMap::new();
    for (i, mi) in basis.millers.iter().enumerate() {
        for (j, mj) in basis.millers.iter().enumerate() {
            let k = sub(*mj, *mi);
            if k >= [0, 0, 0] {
                *acc.entry(k).or_default() += c[i].conj() * c[j];
            }
        }
    }
    hermitian_from_half(basis.rlat(), acc, 1.0 / basis.rlat().cell_volume())
}

/// Completes a half-space coefficient map (keys `>= 0` lexicographically)
/// into a real-valued function, scaling every coefficient by `scale`.
pub(crate) fn hermitian_from_half(
    rlat: &ReciprocalLattice,
    half: BTreeMap<Miller, Complex64>,
    scale: f64,
) -> PeriodicFunction {
    let mut full = BTreeMap::new();
    for (k, v) in half {
        let v = v * scale;
        if k == [0, 0, 0] {
            full.insert(k, Complex64::new(v.re, 0.0));
        } else {
            full.insert(k, v);
            full.insert(neg(k), v.conj());
        }
    }
    PeriodicFunction::from_parts_unchecked(rlat, full, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;
    use crate::units::ev_to_hartree;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn si() -> ReciprocalLattice {
        Lattice::fcc(10.245).unwrap().reciprocal().unwrap()
    }

    #[test]
    fn tiny_cutoff_keeps_only_zero_vector() {
        let basis = build_basis(&si(), 1e-6).unwrap();
        assert_eq!(basis.millers(), &[[0, 0, 0]]);
    }

    #[test]
    fn nonpositive_cutoff_is_rejected() {
        assert!(build_basis(&si(), 0.0).is_err());
        assert!(build_basis(&si(), -1.0).is_err());
    }

    #[test]
    fn cubic_count_matches_triple_loop() {
        let rlat = Lattice::cubic(1.0).unwrap().reciprocal().unwrap();
        for ecut in [1.0, 30.0, 200.0, 750.0] {
            let basis = build_basis(&rlat, ecut).unwrap();
            let mut count = 0;
            for m1 in -20i32..=20 {
                for m2 in -20i32..=20 {
                    for m3 in -20i32..=20 {
                        let g2 = (2.0 * PI).powi(2) * (m1 * m1 + m2 * m2 + m3 * m3) as f64;
                        if 0.5 * g2 < ecut {
                            count += 1;
                        }
                    }
                }
            }
            assert_eq!(basis.len(), count, "ecut {ecut}");
        }
    }

    #[test]
    fn silicon_count_matches_triple_loop() {
        let rlat = si();
        for ev in [180.0, 736.0] {
            let ecut = ev_to_hartree(ev);
            let mut count = 0;
            for m1 in -12i32..=12 {
                for m2 in -12i32..=12 {
                    for m3 in -12i32..=12 {
                        if 0.5 * rlat.point([m1, m2, m3]).norm_squared() < ecut {
                            count += 1;
                        }
                    }
                }
            }
            assert_eq!(build_basis(&rlat, ecut).unwrap().len(), count, "{ev} eV");
        }
    }

    #[test]
    fn basis_is_sorted_and_respects_cutoff() {
        let basis = build_basis(&si(), ev_to_hartree(180.0)).unwrap();
        assert!(basis.millers().windows(2).all(|w| w[0] < w[1]));
        for g in basis.gvecs() {
            assert!(0.5 * g.norm_squared() < basis.ecutoff());
        }
        for (i, m) in basis.millers().iter().enumerate() {
            assert_eq!(basis.position(*m), Some(i));
        }
    }

    #[test]
    fn cap_is_enforced() {
        let err = build_basis_with_cap(&si(), ev_to_hartree(180.0), 10).unwrap_err();
        assert!(matches!(err, Error::BasisTooLarge { .. }));
    }

    #[test]
    fn size_grows_with_cutoff() {
        let rlat = si();
        let mut last = 0;
        for i in 1..40 {
            let n = build_basis(&rlat, 0.5 * i as f64).unwrap().len();
            assert!(n >= last);
            last = n;
        }
    }

    #[test]
    fn single_plane_wave_gives_uniform_density() {
        let basis = build_basis(&si(), 2.0).unwrap();
        let mut c = vec![Complex64::new(0.0, 0.0); basis.len()];
        c[3] = Complex64::new(0.6, 0.8);
        let rho = basis.autocorrelate(&c);
        let vol = basis.rlat().cell_volume();
        assert!(rho.is_real());
        for (m, v) in rho.iter() {
            let expected = if *m == [0, 0, 0] { 1.0 / vol } else { 0.0 };
            assert_abs_diff_eq!(v.re, expected, epsilon = 1e-15);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn two_plane_waves_cross_term() {
        let basis = build_basis(&si(), 2.0).unwrap();
        let mut c = vec![Complex64::new(0.0, 0.0); basis.len()];
        let (i0, i1) = (0, 2);
        c[i0] = Complex64::new(0.5, 0.5);
        c[i1] = Complex64::new(0.5, -0.5);
        let rho = basis.autocorrelate(&c);
        let vol = basis.rlat().cell_volume();
        let k = sub(basis.millers()[i1], basis.millers()[i0]);
        let expected = c[i0].conj() * c[i1] / vol;
        assert!((rho.coeff(k) - expected).norm() < 1e-15);
        assert!((rho.coeff(neg(k)) - expected.conj()).norm() < 1e-15);
    }

    #[test]
    fn autocorrelation_matches_real_space_square() {
        let basis = build_basis(&si(), 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let c: Vec<Complex64> = (0..basis.len())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let rho = basis.autocorrelate(&c);
        let orbital = PeriodicFunction::from_coeffs(
            basis.rlat(),
            basis.millers().iter().copied().zip(c.iter().copied()),
        );
        let n = 2 * rho.max_index().into_iter().max().unwrap() as usize + 1;
        let vol = basis.rlat().cell_volume();
        let from_orbital = orbital.eval_on_grid(n);
        let from_density = rho.eval_on_grid(n);
        for (u, r) in from_orbital.iter().zip(&from_density) {
            assert_abs_diff_eq!(r.re, u.norm_sqr() / vol, epsilon = 1e-10);
            assert_abs_diff_eq!(r.im, 0.0, epsilon = 1e-10);
        }
        let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        assert_abs_diff_eq!(rho.c0().re, norm / vol, epsilon = 1e-12);
    }

    #[test]
    fn difference_table_is_consistent() {
        let basis = build_basis(&si(), 1.5).unwrap();
        let table = basis.differences();
        let n = basis.len();
        for i in 0..n {
            for j in 0..n {
                let d = table.millers[table.pair[i * n + j] as usize];
                assert_eq!(d, sub(basis.millers()[i], basis.millers()[j]));
            }
        }
    }
}
