use nalgebra::DMatrix;
use num_complex::Complex64;

use super::linalg::{gemm, Op};
use crate::lattice::Vec3;
use crate::pwbasis::{PeriodicFunction, PlaneWaveBasis};

/// Matrix of multiplication by `V` in a plane-wave basis: entry `(G, G')` is
/// `V_{G - G'}`. It does not depend on the quasi-momentum, so one instance
/// serves every fiber.
#[derive(Debug, Clone)]
pub struct PotentialCoupling {
    dim: usize,
    storage: Storage,
}

#[derive(Debug, Clone)]
enum Storage {
    /// Compressed rows for potentials with a small Fourier support.
    Sparse {
        row_start: Vec<usize>,
        cols: Vec<usize>,
        vals: Vec<Complex64>,
    },
    Dense(DMatrix<Complex64>),
}

impl PotentialCoupling {
    pub fn new(v: &PeriodicFunction, basis: &PlaneWaveBasis) -> Self {
        let n = basis.len();
        if v.len() * 4 < n {
            let mut row_start = Vec::with_capacity(n + 1);
            let mut cols = Vec::new();
            let mut vals = Vec::new();
            row_start.push(0);
            for mi in basis.millers() {
                let mut row: Vec<(usize, Complex64)> = v
                    .iter()
                    .filter(|(_, c)| c.norm() != 0.0)
                    .filter_map(|(k, c)| {
                        let mj = [mi[0] - k[0], mi[1] - k[1], mi[2] - k[2]];
                        basis.position(mj).map(|j| (j, *c))
                    })
                    .collect();
                row.sort_by_key(|(j, _)| *j);
                for (j, c) in row {
                    cols.push(j);
                    vals.push(c);
                }
                row_start.push(cols.len());
            }
            Self {
                dim: n,
                storage: Storage::Sparse {
                    row_start,
                    cols,
                    vals,
                },
            }
        } else {
            let table = basis.differences();
            let values: Vec<Complex64> = table.millers.iter().map(|d| v.coeff(*d)).collect();
            let m = DMatrix::from_fn(n, n, |i, j| values[table.pair[i * n + j] as usize]);
            Self {
                dim: n,
                storage: Storage::Dense(m),
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse { .. })
    }

    /// `y += V x` for a block of column vectors.
    fn apply_add(&self, x: &DMatrix<Complex64>, y: &mut DMatrix<Complex64>) {
        match &self.storage {
            Storage::Dense(m) => {
                gemm(
                    Complex64::new(1.0, 0.0),
                    m,
                    Op::N,
                    x,
                    Op::N,
                    Complex64::new(1.0, 0.0),
                    y,
                );
            }
            Storage::Sparse {
                row_start,
                cols,
                vals,
            } => {
                let n = self.dim;
                let xs = x.as_slice();
                let ys = y.as_mut_slice();
                for c in 0..x.ncols() {
                    let xc = &xs[c * n..(c + 1) * n];
                    let yc = &mut ys[c * n..(c + 1) * n];
                    for (i, yi) in yc.iter_mut().enumerate() {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for p in row_start[i]..row_start[i + 1] {
                            acc += vals[p] * xc[cols[p]];
                        }
                        *yi += acc;
                    }
                }
            }
        }
    }

    fn add_to_dense(&self, out: &mut DMatrix<Complex64>) {
        match &self.storage {
            Storage::Dense(m) => *out += m,
            Storage::Sparse {
                row_start,
                cols,
                vals,
            } => {
                for i in 0..self.dim {
                    for p in row_start[i]..row_start[i + 1] {
                        out[(i, cols[p])] += vals[p];
                    }
                }
            }
        }
    }
}

/// `H_q = (1/2)|G + q|^2 delta_{GG'} + V_{G-G'}` in the plane-wave basis.
#[derive(Debug, Clone)]
pub struct FiberHamiltonian<'a> {
    q: Vec3,
    kinetic: Vec<f64>,
    coupling: &'a PotentialCoupling,
}

impl<'a> FiberHamiltonian<'a> {
    pub fn new(q: Vec3, basis: &PlaneWaveBasis, coupling: &'a PotentialCoupling) -> Self {
        assert_eq!(
            basis.len(),
            coupling.dim(),
            "coupling built for another basis"
        );
        let kinetic = basis
            .gvecs()
            .iter()
            .map(|g| 0.5 * (g + q).norm_squared())
            .collect();
        Self {
            q,
            kinetic,
            coupling,
        }
    }

    pub fn q(&self) -> Vec3 {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.kinetic.len()
    }

    /// Diagonal of the kinetic part, `(1/2)|G + q|^2`.
    pub fn kinetic(&self) -> &[f64] {
        &self.kinetic
    }

    pub fn apply(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut y = x.clone();
        let n = self.dim();
        for col in y.as_mut_slice().chunks_exact_mut(n) {
            for (v, k) in col.iter_mut().zip(&self.kinetic) {
                *v *= k;
            }
        }
        self.coupling.apply_add(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim(),
            self.kinetic.iter().map(|&k| Complex64::new(k, 0.0)),
        ));
        self.coupling.add_to_dense(&mut m);
        m
    }
}

/// Dense fiber Hamiltonian at quasi-momentum `q`.
pub fn assemble(q: &Vec3, v: &PeriodicFunction, basis: &PlaneWaveBasis) -> DMatrix<Complex64> {
    let coupling = PotentialCoupling::new(v, basis);
    FiberHamiltonian::new(*q, basis, &coupling).to_dense()
}
