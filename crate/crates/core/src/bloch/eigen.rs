//! Lowest eigenpairs of Hermitian fiber Hamiltonians.
//!
//! Small problems go through a dense Hermitian eigendecomposition. Larger
//! ones use a block LOBPCG iteration whose search space `[X, T R, P]` is
//! re-orthonormalised every step, which keeps the Rayleigh-Ritz projection
//! accurate down to rounding level and allows warm starts from a previous
//! SCF iteration.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::hamiltonian::FiberHamiltonian;
use super::linalg::{gemm, mul, Op};
use crate::error::{Error, Result};
use crate::lattice::Vec3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative Gram eigenvalue below which a search direction is discarded.
const SVQB_DROP: f64 = 1e-14;

/// Residual bound required by [`FiberSolution`]: `|H v - lambda v| <= 1e-8 (1 + |lambda|)`.
pub const RESIDUAL_INVARIANT: f64 = 1e-8;

/// Lowest eigenpairs of one fiber operator.
#[derive(Debug, Clone)]
pub struct FiberSolution {
    pub q: Vec3,
    /// Ascending, Hartree.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal columns on the plane-wave basis.
    pub eigenvectors: DMatrix<Complex64>,
}

impl FiberSolution {
    pub fn nbands(&self) -> usize {
        self.eigenvalues.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EigenMethod {
    Dense,
    Iterative,
    /// Dense below [`EigenOptions::dense_limit`], iterative above.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub method: EigenMethod,
    pub dense_limit: usize,
    /// Relative residual target `|r| <= tol (1 + |lambda|)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Extra block columns beyond the wanted ones.
    pub guard: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            method: EigenMethod::Auto,
            dense_limit: 96,
            tolerance: 1e-10,
            max_iterations: 400,
            guard: 3,
        }
    }
}

/// Dense route: full diagonalisation, keeping `n + 1` pairs when possible
/// (one buffer band beyond the requested ones).
pub fn eigensolve_lowest(h: &DMatrix<Complex64>, n: usize) -> Result<FiberSolution> {
    eigensolve_dense(h, n + 1, Vec3::zeros())
}

fn eigensolve_dense(h: &DMatrix<Complex64>, keep: usize, q: Vec3) -> Result<FiberSolution> {
    let dim = h.nrows();
    if dim == 0 || h.ncols() != dim {
        return Err(Error::Eigensolver(format!(
            "expected a non-empty square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if keep == 0 {
        return Err(Error::InvalidArgument(
            "at least one eigenpair is required".into(),
        ));
    }
    let keep = keep.min(dim);
    let hermitian = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(hermitian);
    if eig.eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigensolver(format!(
            "dense Hermitian solve produced non-finite eigenvalues (dim {dim})"
        )));
    }
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order[..keep].iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(dim, keep, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(FiberSolution {
        q,
        eigenvalues,
        eigenvectors,
    })
}

/// Operator interface used by the iterative solver.
pub trait HermitianOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64>;
    /// Approximate `(H - lambda)^-1` applied to a residual column.
    fn precondition(
        &self,
        residual: &mut DVector<Complex64>,
        ritz_vector: &DVector<Complex64>,
        lambda: f64,
    );
    fn to_dense(&self) -> DMatrix<Complex64>;
    /// Diagonal used to seed cold starts.
    fn diagonal(&self) -> Vec<f64>;
}

impl HermitianOperator for FiberHamiltonian<'_> {
    fn dim(&self) -> usize {
        FiberHamiltonian::dim(self)
    }

    fn apply(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        FiberHamiltonian::apply(self, x)
    }

    /// Kinetic-energy preconditioner `1 / (T_G + <T>)`.
    fn precondition(
        &self,
        residual: &mut DVector<Complex64>,
        ritz_vector: &DVector<Complex64>,
        _lambda: f64,
    ) {
        let kin = self.kinetic();
        let mean: f64 = ritz_vector
            .iter()
            .zip(kin)
            .map(|(c, k)| c.norm_sqr() * k)
            .sum::<f64>()
            .max(0.5);
        for (r, k) in residual.iter_mut().zip(kin) {
            *r /= k + mean;
        }
    }

    fn to_dense(&self) -> DMatrix<Complex64> {
        FiberHamiltonian::to_dense(self)
    }

    fn diagonal(&self) -> Vec<f64> {
        self.kinetic().to_vec()
    }
}

impl HermitianOperator for DMatrix<Complex64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        mul(self, Op::N, x, Op::N)
    }

    fn precondition(
        &self,
        residual: &mut DVector<Complex64>,
        _ritz_vector: &DVector<Complex64>,
        lambda: f64,
    ) {
        for (i, r) in residual.iter_mut().enumerate() {
            let d = self[(i, i)].re - lambda;
            *r /= if d.abs() < 1e-2 {
                1e-2f64.copysign(d)
            } else {
                d
            };
        }
    }

    fn to_dense(&self) -> DMatrix<Complex64> {
        self.clone()
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows()).map(|i| self[(i, i)].re).collect()
    }
}

/// Lowest `nev` eigenpairs of `op`, optionally warm-started from `guess`.
pub fn solve_lowest<O: HermitianOperator + ?Sized>(
    op: &O,
    nev: usize,
    guess: Option<&DMatrix<Complex64>>,
    q: Vec3,
    opts: &EigenOptions,
) -> Result<FiberSolution> {
    let dim = op.dim();
    if nev == 0 || nev > dim {
        return Err(Error::InvalidArgument(format!(
            "requested {nev} eigenpairs of a {dim}-dimensional operator"
        )));
    }
    let block = (nev + opts.guard).min(dim);
    let dense = match opts.method {
        EigenMethod::Dense => true,
        EigenMethod::Iterative => 3 * block >= dim,
        EigenMethod::Auto => dim <= opts.dense_limit || 3 * block >= dim,
    };
    if dense {
        return eigensolve_dense(&op.to_dense(), nev, q);
    }
    lobpcg(op, nev, block, guess, q, opts)
}

/// Modified Gram-Schmidt, two passes, appending `v` to `basis` unless it is
/// numerically dependent on the columns already there.
fn push_orthonormal(basis: &mut Vec<DVector<Complex64>>, mut v: DVector<Complex64>) -> bool {
    let norm = v.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return false;
    }
    v /= Complex64::new(norm, 0.0);
    for pass in 0..2 {
        for b in basis.iter() {
            let overlap = b.dotc(&v);
            v.axpy(-overlap, b, Complex64::new(1.0, 0.0));
        }
        let remaining = v.norm();
        if pass == 0 && remaining < 1e-10 {
            return false;
        }
        v /= Complex64::new(remaining, 0.0);
    }
    basis.push(v);
    true
}

fn columns_to_matrix(dim: usize, cols: &[DVector<Complex64>]) -> DMatrix<Complex64> {
    DMatrix::from_fn(dim, cols.len(), |r, c| cols[c][r])
}

/// Deterministic pseudo-random perturbation for cold starts.
fn jitter(seed: u64) -> f64 {
    let mut x = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(0xD1B5_4A32_D192_ED03);
    x ^= x >> 31;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 29;
    (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}

fn cold_start(diagonal: &[f64], block: usize) -> Vec<DVector<Complex64>> {
    let dim = diagonal.len();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| diagonal[a].total_cmp(&diagonal[b]));
    (0..block)
        .map(|c| {
            DVector::from_fn(dim, |r, _| {
                let base = if r == order[c] { 1.0 } else { 0.0 };
                let seed = (c * dim + r) as u64;
                Complex64::new(base + 1e-3 * jitter(2 * seed), 1e-3 * jitter(2 * seed + 1))
            })
        })
        .collect()
}

/// Ritz values and coefficient vectors of the projection `S^H (A S)`,
/// ascending.
fn rayleigh_ritz(
    s: &DMatrix<Complex64>,
    as_: &DMatrix<Complex64>,
) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let g = mul(s, Op::H, as_, Op::N);
    let (vals, vecs) = sorted_eigen(&g);
    if vals.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigensolver(
            "Rayleigh-Ritz projection is not finite".into(),
        ));
    }
    Ok((vals, vecs))
}

fn sorted_eigen(g: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let m = g.nrows();
    let g = (g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Removes from `y` its components along the orthonormal columns of `x`.
fn project_out(x: &DMatrix<Complex64>, y: &mut DMatrix<Complex64>) {
    let overlap = mul(x, Op::H, y, Op::N);
    gemm(
        Complex64::new(-1.0, 0.0),
        x,
        Op::N,
        &overlap,
        Op::N,
        Complex64::new(1.0, 0.0),
        y,
    );
}

/// Orthonormalises the columns of `y` through the eigendecomposition of its
/// scaled Gram matrix, dropping directions that are numerically dependent.
fn svqb(y: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = y.ncols();
    let norms: Vec<f64> = (0..n).map(|j| y.column(j).norm()).collect();
    let keep: Vec<usize> = (0..n)
        .filter(|&j| norms[j] > 0.0 && norms[j].is_finite())
        .collect();
    if keep.is_empty() {
        return DMatrix::zeros(y.nrows(), 0);
    }
    let scaled = DMatrix::from_fn(y.nrows(), keep.len(), |r, c| {
        y[(r, keep[c])] / norms[keep[c]]
    });
    let gram = mul(&scaled, Op::H, &scaled, Op::N);
    let (vals, vecs) = sorted_eigen(&gram);
    let largest = vals.last().copied().unwrap_or(0.0);
    let kept: Vec<usize> = (0..vals.len())
        .filter(|&i| vals[i] > SVQB_DROP * largest)
        .collect();
    let transform = DMatrix::from_fn(keep.len(), kept.len(), |r, c| {
        vecs[(r, kept[c])] / vals[kept[c]].sqrt()
    });
    mul(&scaled, Op::N, &transform, Op::N)
}

/// New search directions `y`, orthonormal and orthogonal to `x`. Two rounds
/// of projection and orthonormalisation keep the defect at rounding level.
fn orthonormal_complement(x: &DMatrix<Complex64>, mut y: DMatrix<Complex64>) -> DMatrix<Complex64> {
    for _ in 0..2 {
        if y.ncols() == 0 {
            break;
        }
        project_out(x, &mut y);
        y = svqb(&y);
    }
    y
}

fn lobpcg<O: HermitianOperator + ?Sized>(
    op: &O,
    nev: usize,
    block: usize,
    guess: Option<&DMatrix<Complex64>>,
    q: Vec3,
    opts: &EigenOptions,
) -> Result<FiberSolution> {
    let dim = op.dim();
    let mut cols: Vec<DVector<Complex64>> = Vec::with_capacity(block);
    if let Some(g) = guess {
        if g.nrows() != dim {
            return Err(Error::InvalidArgument(
                "warm-start vectors have the wrong length".into(),
            ));
        }
        for c in 0..g.ncols().min(block) {
            push_orthonormal(&mut cols, g.column(c).into_owned());
        }
    }
    for v in cold_start(&op.diagonal(), block) {
        if cols.len() == block {
            break;
        }
        push_orthonormal(&mut cols, v);
    }
    if cols.len() < block {
        return Err(Error::Eigensolver(
            "could not build an initial block".into(),
        ));
    }

    let mut x = columns_to_matrix(dim, &cols);
    let mut ax = op.apply(&x);
    let (theta, c) = rayleigh_ritz(&x, &ax)?;
    x = mul(&x, Op::N, &c, Op::N);
    ax = mul(&ax, Op::N, &c, Op::N);
    let mut lambda: Vec<f64> = theta;
    let mut p: Option<DMatrix<Complex64>> = None;
    let mut worst = f64::INFINITY;

    for _ in 0..opts.max_iterations {
        let mut residual = ax.clone();
        for j in 0..block {
            let lam = Complex64::new(lambda[j], 0.0);
            for (r, xv) in residual.column_mut(j).iter_mut().zip(x.column(j).iter()) {
                *r -= lam * xv;
            }
        }
        let norms: Vec<f64> = (0..block).map(|j| residual.column(j).norm()).collect();
        let converged: Vec<bool> = (0..block)
            .map(|j| norms[j] <= opts.tolerance * (1.0 + lambda[j].abs()))
            .collect();
        worst = (0..nev)
            .map(|j| norms[j] / (1.0 + lambda[j].abs()))
            .fold(0.0, f64::max);
        if converged[..nev].iter().all(|&c| c) {
            return Ok(FiberSolution {
                q,
                eigenvalues: lambda[..nev].to_vec(),
                eigenvectors: x.columns(0, nev).into_owned(),
            });
        }

        let active: Vec<usize> = (0..block).filter(|&j| !converged[j]).collect();
        let extra = p.as_ref().map_or(0, |p| p.ncols());
        let mut y = DMatrix::zeros(dim, active.len() + extra);
        for (k, &j) in active.iter().enumerate() {
            let mut w = residual.column(j).into_owned();
            op.precondition(&mut w, &x.column(j).into_owned(), lambda[j]);
            y.set_column(k, &w);
        }
        if let Some(p) = &p {
            y.columns_mut(active.len(), extra).copy_from(p);
        }
        let y = orthonormal_complement(&x, y);
        if y.ncols() == 0 {
            break;
        }
        let ay = op.apply(&y);
        let mut s = DMatrix::zeros(dim, block + y.ncols());
        s.columns_mut(0, block).copy_from(&x);
        s.columns_mut(block, y.ncols()).copy_from(&y);
        let mut as_ = DMatrix::zeros(dim, block + y.ncols());
        as_.columns_mut(0, block).copy_from(&ax);
        as_.columns_mut(block, y.ncols()).copy_from(&ay);

        let (theta, coef) = rayleigh_ritz(&s, &as_)?;
        let coef_x = coef.columns(0, block).into_owned();
        x = mul(&s, Op::N, &coef_x, Op::N);
        ax = mul(&as_, Op::N, &coef_x, Op::N);
        let coef_y = coef.view((block, 0), (y.ncols(), block)).into_owned();
        p = Some(mul(&y, Op::N, &coef_y, Op::N));
        lambda = theta[..block].to_vec();
    }
    Err(Error::Eigensolver(format!(
        "LOBPCG did not converge in {} iterations at q = ({:.6}, {:.6}, {:.6}); worst relative residual {:e}",
        opts.max_iterations, q.x, q.y, q.z, worst
    )))
}

/// Largest `|H v - lambda v| / (1 + |lambda|)` over the stored pairs.
pub fn max_relative_residual<O: HermitianOperator + ?Sized>(op: &O, sol: &FiberSolution) -> f64 {
    let hv = op.apply(&sol.eigenvectors);
    (0..sol.nbands())
        .map(|j| {
            let lam = sol.eigenvalues[j];
            let r = hv.column(j) - sol.eigenvectors.column(j) * Complex64::new(lam, 0.0);
            r.norm() / (1.0 + lam.abs())
        })
        .fold(0.0, f64::max)
}

/// `max |V^H V - I|` entrywise.
pub fn orthonormality_defect(v: &DMatrix<Complex64>) -> f64 {
    let gram = v.adjoint() * v;
    let mut worst: f64 = 0.0;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                ZERO
            };
            worst = worst.max((gram[(i, j)] - target).norm());
        }
    }
    worst
}
