//! Direct and reciprocal Bravais lattices.
//!
//! The reduced Brillouin cell is the parallelepiped
//! `{ sum_i alpha_i b_i : alpha_i in [-1/2, 1/2) }` spanned by the reciprocal
//! basis. Every sampled quantity is periodic over the reciprocal lattice, so
//! grid sums over this cell equal sums over the Wigner-Seitz cell.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Relative determinant below which a basis is rejected as singular.
const DEGENERACY_TOLERANCE: f64 = 1e-10;

/// Real-space lattice basis, lengths in Bohr.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    vectors: [Vec3; 3],
    volume: f64,
}

impl Lattice {
    pub fn new(a1: Vec3, a2: Vec3, a3: Vec3) -> Result<Self> {
        let det = Matrix3::from_columns(&[a1, a2, a3]).determinant();
        let scale = a1.norm() * a2.norm() * a3.norm();
        if !det.is_finite() || scale == 0.0 || det.abs() <= DEGENERACY_TOLERANCE * scale {
            return Err(Error::DegenerateLattice { det });
        }
        Ok(Self {
            vectors: [a1, a2, a3],
            volume: det.abs(),
        })
    }

    /// Simple cubic lattice with edge `a`.
    pub fn cubic(a: f64) -> Result<Self> {
        Self::new(
            Vec3::new(a, 0.0, 0.0),
            Vec3::new(0.0, a, 0.0),
            Vec3::new(0.0, 0.0, a),
        )
    }

    /// Face-centred cubic lattice of diamond silicon with conventional
    /// constant `a`: `a1 = a/2 (0,1,1)`, `a2 = a/2 (1,0,1)`, `a3 = a/2 (1,1,0)`.
    pub fn fcc(a: f64) -> Result<Self> {
        let h = 0.5 * a;
        Self::new(
            Vec3::new(0.0, h, h),
            Vec3::new(h, 0.0, h),
            Vec3::new(h, h, 0.0),
        )
    }

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        let [a1, a2, a3] = rows.map(Vec3::from);
        Self::new(a1, a2, a3)
    }

    pub fn vectors(&self) -> &[Vec3; 3] {
        &self.vectors
    }

    /// Volume of the unit cell, Bohr^3.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&self.vectors)
    }

    /// Cartesian position of the lattice vector `sum_i n_i a_i`.
    pub fn point(&self, n: [i64; 3]) -> Vec3 {
        self.vectors[0] * n[0] as f64
            + self.vectors[1] * n[1] as f64
            + self.vectors[2] * n[2] as f64
    }

    /// Applies an orthogonal transformation to every basis vector.
    pub fn rotated(&self, rotation: &Matrix3<f64>) -> Result<Self> {
        let [a1, a2, a3] = self.vectors;
        Self::new(rotation * a1, rotation * a2, rotation * a3)
    }

    pub fn reciprocal(&self) -> Result<ReciprocalLattice> {
        reciprocal(self)
    }
}

/// Dual basis `b_i . a_j = 2 pi delta_ij`, in Bohr^-1.
#[derive(Debug, Clone, PartialEq)]
pub struct ReciprocalLattice {
    vectors: [Vec3; 3],
    direct: [Vec3; 3],
    cell_volume: f64,
    bz_radius: f64,
}

/// Builds the reciprocal basis `B = 2 pi (A^T)^-1`.
pub fn reciprocal(lattice: &Lattice) -> Result<ReciprocalLattice> {
    let a = lattice.matrix();
    let inv_t = a
        .transpose()
        .try_inverse()
        .ok_or(Error::DegenerateLattice {
            det: a.determinant(),
        })?;
    let b = inv_t * (2.0 * PI);
    let vectors = [
        b.column(0).into_owned(),
        b.column(1).into_owned(),
        b.column(2).into_owned(),
    ];
    Ok(ReciprocalLattice::assemble(
        vectors,
        *lattice.vectors(),
        lattice.volume(),
    ))
}

impl ReciprocalLattice {
    fn assemble(vectors: [Vec3; 3], direct: [Vec3; 3], cell_volume: f64) -> Self {
        let mut bz_radius: f64 = 0.0;
        for s1 in [-0.5, 0.5] {
            for s2 in [-0.5, 0.5] {
                for s3 in [-0.5, 0.5] {
                    let corner = vectors[0] * s1 + vectors[1] * s2 + vectors[2] * s3;
                    bz_radius = bz_radius.max(corner.norm());
                }
            }
        }
        Self {
            vectors,
            direct,
            cell_volume,
            bz_radius,
        }
    }

    /// Rebuilds a reciprocal lattice from its three basis vectors.
    pub fn from_vectors(b1: Vec3, b2: Vec3, b3: Vec3) -> Result<Self> {
        // 2 pi (B^T)^-1 is the direct basis again.
        let as_lattice = Lattice::new(b1, b2, b3)?;
        let dual = reciprocal(&as_lattice)?;
        let direct = Lattice::new(dual.vectors[0], dual.vectors[1], dual.vectors[2])?;
        Ok(Self::assemble(
            [b1, b2, b3],
            *direct.vectors(),
            direct.volume(),
        ))
    }

    pub fn vectors(&self) -> &[Vec3; 3] {
        &self.vectors
    }

    /// Real-space basis this lattice is dual to.
    pub fn direct_vectors(&self) -> &[Vec3; 3] {
        &self.direct
    }

    /// Volume of the real-space unit cell, Bohr^3.
    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Volume of the reduced Brillouin cell, Bohr^-3.
    pub fn volume(&self) -> f64 {
        Matrix3::from_columns(&self.vectors).determinant().abs()
    }

    /// Largest `|q|` over the reduced cell (attained at a corner).
    pub fn bz_radius(&self) -> f64 {
        self.bz_radius
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&self.vectors)
    }

    /// Basis vector lengths sorted ascending.
    pub fn sorted_lengths(&self) -> [f64; 3] {
        let mut lengths = self.vectors.map(|b| b.norm());
        lengths.sort_by(f64::total_cmp);
        lengths
    }

    /// Cartesian vector `sum_i m_i b_i`.
    pub fn point(&self, m: [i32; 3]) -> Vec3 {
        self.vectors[0] * m[0] as f64
            + self.vectors[1] * m[1] as f64
            + self.vectors[2] * m[2] as f64
    }

    pub fn frac_coords(&self, q: &Vec3) -> Vec3 {
        frac_coords(self, q)
    }

    /// Whether `q` lies in the half-open reduced cell, up to rounding.
    pub fn in_reduced_cell(&self, q: &Vec3) -> bool {
        const SLACK: f64 = 1e-12;
        let alpha = self.frac_coords(q);
        alpha.iter().all(|&x| x >= -0.5 - SLACK && x < 0.5 - SLACK)
    }
}

/// Coordinates of `q` in the reciprocal basis. Uses `alpha_i = a_i . q / 2 pi`.
pub fn frac_coords(rlat: &ReciprocalLattice, q: &Vec3) -> Vec3 {
    let [a1, a2, a3] = rlat.direct;
    Vec3::new(a1.dot(q), a2.dot(q), a3.dot(q)) / (2.0 * PI)
}
