//! Lattice-periodic scalar fields stored by their Fourier coefficients.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::ReciprocalLattice;

/// Integer coordinates `(m1, m2, m3)` of a reciprocal lattice vector `sum m_i b_i`.
pub type Miller = [i32; 3];

/// Tolerance on `c_{-k} = conj(c_k)` for real-valued functions.
pub const REAL_SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Relative agreement required between two successive grid refinements in
/// [`PeriodicFunction::sup_norm_refined`].
const SUP_NORM_AGREEMENT: f64 = 1e-3;
const SUP_NORM_MAX_GRID: usize = 512;

pub(crate) fn neg(m: Miller) -> Miller {
    [-m[0], -m[1], -m[2]]
}

pub(crate) fn sub(a: Miller, b: Miller) -> Miller {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// `f(x) = sum_k c_k exp(i k.x)` with finitely many nonzero `c_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicFunction {
    rlat: ReciprocalLattice,
    coeffs: BTreeMap<Miller, Complex64>,
    real: bool,
}

impl PeriodicFunction {
    pub fn zero(rlat: &ReciprocalLattice) -> Self {
        Self {
            rlat: rlat.clone(),
            coeffs: BTreeMap::new(),
            real: true,
        }
    }

    pub fn constant(rlat: &ReciprocalLattice, value: f64) -> Self {
        let mut f = Self::zero(rlat);
        f.coeffs.insert([0, 0, 0], Complex64::new(value, 0.0));
        f
    }

    /// General complex-valued function; the real-valued flag is cleared.
    pub fn from_coeffs(
        rlat: &ReciprocalLattice,
        coeffs: impl IntoIterator<Item = (Miller, Complex64)>,
    ) -> Self {
        let mut map = BTreeMap::new();
        for (m, c) in coeffs {
            *map.entry(m).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        Self {
            rlat: rlat.clone(),
            coeffs: map,
            real: false,
        }
    }

    /// Builds a real-valued function, checking `c_{-k} = conj(c_k)`.
    pub fn real_from_coeffs(
        rlat: &ReciprocalLattice,
        coeffs: impl IntoIterator<Item = (Miller, Complex64)>,
    ) -> Result<Self> {
        Self::from_coeffs(rlat, coeffs).into_real()
    }

    /// Sets the real-valued flag after verifying the coefficient symmetry.
    pub fn into_real(mut self) -> Result<Self> {
        let zero = Complex64::new(0.0, 0.0);
        for (m, c) in &self.coeffs {
            let partner = self.coeffs.get(&neg(*m)).copied().unwrap_or(zero);
            if (partner - c.conj()).norm() > REAL_SYMMETRY_TOLERANCE {
                return Err(Error::InvalidArgument(format!(
                    "coefficients at {:?} break c(-k) = conj(c(k))",
                    m
                )));
            }
        }
        self.real = true;
        Ok(self)
    }

    pub(crate) fn from_parts_unchecked(
        rlat: &ReciprocalLattice,
        coeffs: BTreeMap<Miller, Complex64>,
        real: bool,
    ) -> Self {
        Self {
            rlat: rlat.clone(),
            coeffs,
            real,
        }
    }

    pub fn rlat(&self) -> &ReciprocalLattice {
        &self.rlat
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn coeff(&self, m: Miller) -> Complex64 {
        self.coeffs.get(&m).copied().unwrap_or_default()
    }

    pub fn c0(&self) -> Complex64 {
        self.coeff([0, 0, 0])
    }

    pub fn coeffs(&self) -> &BTreeMap<Miller, Complex64> {
        &self.coeffs
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Miller, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest `|m_i|` over the support, per axis.
    pub fn max_index(&self) -> [i32; 3] {
        let mut out = [0; 3];
        for m in self.coeffs.keys() {
            for d in 0..3 {
                out[d] = out[d].max(m[d].abs());
            }
        }
        out
    }

    /// `int_cell f dx = |cell| c_0`.
    pub fn integral(&self) -> Complex64 {
        self.c0() * self.rlat.cell_volume()
    }

    /// `int_cell f g dx = |cell| sum_k f_k g_{-k}`.
    pub fn integral_of_product(&self, other: &Self) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in &self.coeffs {
            if let Some(d) = other.coeffs.get(&neg(*m)) {
                acc += c * d;
            }
        }
        acc * self.rlat.cell_volume()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let coeffs = self.coeffs.iter().map(|(m, c)| (*m, c * factor)).collect();
        Self::from_parts_unchecked(&self.rlat, coeffs, self.real)
    }

    /// `a * self + b * other`; stays real-valued when both inputs are.
    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Self {
        let mut coeffs: BTreeMap<Miller, Complex64> =
            self.coeffs.iter().map(|(m, c)| (*m, c * a)).collect();
        for (m, c) in &other.coeffs {
            *coeffs.entry(*m).or_default() += c * b;
        }
        Self::from_parts_unchecked(&self.rlat, coeffs, self.real && other.real)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.linear_combination(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.linear_combination(1.0, other, -1.0)
    }

    /// Adds `value` to the constant coefficient.
    pub fn shifted(&self, value: f64) -> Self {
        let mut out = self.clone();
        *out.coeffs.entry([0, 0, 0]).or_default() += value;
        out
    }

    /// Values on the `n^3` grid `x = sum_i (j_i / n) a_i`, flattened with
    /// `j3` fastest. Exact separable summation, one axis at a time.
    pub fn eval_on_grid(&self, n: usize) -> Vec<Complex64> {
        eval_on_grid(self, n)
    }

    /// Maximum of `|f|` over the `n^3` grid.
    pub fn sup_norm(&self, n: usize) -> f64 {
        sup_norm(self, n)
    }

    /// Maximum of `|f|` on grids refined from `2 M + 1` points per axis,
    /// doubling until two successive refinements agree within 0.1%. The seed
    /// grid itself only fixes the spacing and is never compared.
    pub fn sup_norm_refined(&self) -> f64 {
        let m = self.max_index().into_iter().max().unwrap_or(0) as usize;
        let mut n = 2 * (2 * m + 1);
        let mut previous = self.sup_norm(n);
        while n < SUP_NORM_MAX_GRID {
            n *= 2;
            let current = self.sup_norm(n);
            if (current - previous).abs() <= SUP_NORM_AGREEMENT * current.abs() {
                return current.max(previous);
            }
            previous = current;
        }
        previous
    }
}

/// See [`PeriodicFunction::eval_on_grid`].
pub fn eval_on_grid(f: &PeriodicFunction, n: usize) -> Vec<Complex64> {
    assert!(n >= 1, "grid resolution must be positive");
    let zero = Complex64::new(0.0, 0.0);
    if f.is_empty() {
        return vec![zero; n * n * n];
    }
    let mi = f.max_index();
    let span = [
        2 * mi[0] as usize + 1,
        2 * mi[1] as usize + 1,
        2 * mi[2] as usize + 1,
    ];
    // phase[(m + M) * n + j] = exp(2 pi i m j / n) per axis, exact mod n.
    let phases: Vec<Vec<Complex64>> = (0..3)
        .map(|d| {
            let mut table = Vec::with_capacity(span[d] * n);
            for m in -mi[d]..=mi[d] {
                for j in 0..n {
                    let r = (m as i64 * j as i64).rem_euclid(n as i64) as f64;
                    table.push(Complex64::from_polar(1.0, 2.0 * PI * r / n as f64));
                }
            }
            table
        })
        .collect();

    // Stage 1: sum over m3 -> a[(m1, m2), j3].
    let mut stage1 = vec![zero; span[0] * span[1] * n];
    for (m, c) in f.iter() {
        let i1 = (m[0] + mi[0]) as usize;
        let i2 = (m[1] + mi[1]) as usize;
        let i3 = (m[2] + mi[2]) as usize;
        let row = &mut stage1[(i1 * span[1] + i2) * n..(i1 * span[1] + i2 + 1) * n];
        let ph = &phases[2][i3 * n..(i3 + 1) * n];
        for (out, p) in row.iter_mut().zip(ph) {
            *out += c * p;
        }
    }
    // Stage 2: sum over m2 -> b[m1, j2, j3].
    let mut stage2 = vec![zero; span[0] * n * n];
    for i1 in 0..span[0] {
        for i2 in 0..span[1] {
            let src = &stage1[(i1 * span[1] + i2) * n..(i1 * span[1] + i2 + 1) * n];
            if src.iter().all(|z| *z == zero) {
                continue;
            }
            for j2 in 0..n {
                let p = phases[1][i2 * n + j2];
                let dst = &mut stage2[(i1 * n + j2) * n..(i1 * n + j2 + 1) * n];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += p * s;
                }
            }
        }
    }
    // Stage 3: sum over m1.
    let mut out = vec![zero; n * n * n];
    for i1 in 0..span[0] {
        let src = &stage2[i1 * n * n..(i1 + 1) * n * n];
        for j1 in 0..n {
            let p = phases[0][i1 * n + j1];
            let dst = &mut out[j1 * n * n..(j1 + 1) * n * n];
            for (o, s) in dst.iter_mut().zip(src) {
                *o += p * s;
            }
        }
    }
    out
}

/// See [`PeriodicFunction::sup_norm`].
pub fn sup_norm(f: &PeriodicFunction, n: usize) -> f64 {
    eval_on_grid(f, n)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Lattice, Vec3};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn si() -> ReciprocalLattice {
        Lattice::fcc(10.245).unwrap().reciprocal().unwrap()
    }

    fn random_function(
        rlat: &ReciprocalLattice,
        rng: &mut ChaCha8Rng,
        real: bool,
    ) -> PeriodicFunction {
        let mut coeffs = Vec::new();
        for _ in 0..12 {
            let m = [
                rng.random_range(-3..=3),
                rng.random_range(-3..=3),
                rng.random_range(-3..=3),
            ];
            let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            coeffs.push((m, c));
            if real {
                coeffs.push((neg(m), c.conj()));
            }
        }
        let f = PeriodicFunction::from_coeffs(rlat, coeffs);
        if real {
            // the zero mode may have picked up an imaginary part from itself
            let mut f = f;
            if let Some(c) = f.coeffs.get_mut(&[0, 0, 0]) {
                c.im = 0.0;
            }
            f.into_real().unwrap()
        } else {
            f
        }
    }

    fn direct_value(f: &PeriodicFunction, x: &Vec3) -> Complex64 {
        f.iter()
            .map(|(m, c)| c * Complex64::from_polar(1.0, f.rlat().point(*m).dot(x)))
            .sum()
    }

    #[test]
    fn constant_evaluates_to_itself() {
        let f = PeriodicFunction::constant(&si(), 3.0);
        for z in f.eval_on_grid(5) {
            assert_abs_diff_eq!(z.re, 3.0, epsilon = 1e-15);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn cosine_mode() {
        let rlat = si();
        let one = Complex64::new(1.0, 0.0);
        let f = PeriodicFunction::real_from_coeffs(&rlat, [([1, 0, 0], one), ([-1, 0, 0], one)])
            .unwrap();
        let n = 6;
        let values = f.eval_on_grid(n);
        let a = rlat.direct_vectors();
        for j1 in 0..n {
            for j2 in 0..n {
                for j3 in 0..n {
                    let x = a[0] * (j1 as f64 / n as f64)
                        + a[1] * (j2 as f64 / n as f64)
                        + a[2] * (j3 as f64 / n as f64);
                    let expected = 2.0 * rlat.vectors()[0].dot(&x).cos();
                    let got = values[(j1 * n + j2) * n + j3];
                    assert_abs_diff_eq!(got.re, expected, epsilon = 1e-13);
                    assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn separable_evaluation_matches_direct_summation() {
        let rlat = si();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_function(&rlat, &mut rng, false);
        let n = 7;
        let values = f.eval_on_grid(n);
        let a = rlat.direct_vectors();
        for j1 in 0..n {
            for j2 in 0..n {
                for j3 in 0..n {
                    let x = a[0] * (j1 as f64 / n as f64)
                        + a[1] * (j2 as f64 / n as f64)
                        + a[2] * (j3 as f64 / n as f64);
                    let diff = values[(j1 * n + j2) * n + j3] - direct_value(&f, &x);
                    assert!(diff.norm() < 1e-12, "diff {}", diff.norm());
                }
            }
        }
    }

    #[test]
    fn sup_norm_simple_cases() {
        let rlat = si();
        assert_abs_diff_eq!(
            PeriodicFunction::constant(&rlat, -2.0).sup_norm(3),
            2.0,
            epsilon = 1e-15
        );
        let half = Complex64::new(0.5, 0.0);
        let f = PeriodicFunction::real_from_coeffs(&rlat, [([1, 0, 0], half), ([-1, 0, 0], half)])
            .unwrap();
        assert_abs_diff_eq!(f.sup_norm(4), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.sup_norm_refined(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn refined_sup_norm_tracks_fine_grid() {
        let rlat = si();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let f = random_function(&rlat, &mut rng, true);
            let m = f.max_index().into_iter().max().unwrap() as usize;
            let n = 2 * (2 * m + 1);
            let fine = f.sup_norm(4 * n);
            let refined = f.sup_norm_refined();
            assert!((refined - fine).abs() <= 0.01 * fine, "{refined} vs {fine}");
        }
    }

    #[test]
    fn parseval_identity() {
        let rlat = si();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_function(&rlat, &mut rng, false);
        // grid of 7 points per axis resolves products of modes up to |m| = 3 exactly
        let n = 7;
        let mean_sq: f64 =
            f.eval_on_grid(n).iter().map(|z| z.norm_sqr()).sum::<f64>() / (n * n * n) as f64;
        let coeff_sq: f64 = f.iter().map(|(_, c)| c.norm_sqr()).sum();
        assert_abs_diff_eq!(mean_sq, coeff_sq, epsilon = 1e-10 * coeff_sq);
    }

    #[test]
    fn real_flag_survives_addition() {
        let rlat = si();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_function(&rlat, &mut rng, true);
        let g = random_function(&rlat, &mut rng, true);
        assert!(f.add(&g).is_real());
        assert!(f.add(&g).into_real().is_ok());
        let h = random_function(&rlat, &mut rng, false);
        assert!(!f.add(&h).is_real());
    }

    #[test]
    fn asymmetric_coefficients_are_not_real() {
        let rlat = si();
        let f = PeriodicFunction::from_coeffs(&rlat, [([1, 0, 0], Complex64::new(1.0, 0.0))]);
        assert!(f.into_real().is_err());
    }
}
