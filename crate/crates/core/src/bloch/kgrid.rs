use crate::error::{Error, Result};
use crate::lattice::{ReciprocalLattice, Vec3};

/// The `L^3` quasi-momenta `(L^-1 R*)` inside the reduced cell.
#[derive(Debug, Clone, PartialEq)]
pub struct KGrid {
    l: usize,
    indices: Vec<[i32; 3]>,
    points: Vec<Vec3>,
}

/// Points `sum_i (m_i / L) b_i` with `m_i` in `{-floor(L/2), ..., ceil(L/2) - 1}`,
/// which puts every fractional coordinate in `[-1/2, 1/2)`.
pub fn kgrid(rlat: &ReciprocalLattice, l: usize) -> Result<KGrid> {
    if l == 0 {
        return Err(Error::InvalidArgument(
            "grid size L must be at least 1".into(),
        ));
    }
    let li = l as i32;
    let lo = -(li / 2);
    let hi = lo + li;
    let mut indices = Vec::with_capacity(l * l * l);
    let mut points = Vec::with_capacity(l * l * l);
    for m1 in lo..hi {
        for m2 in lo..hi {
            for m3 in lo..hi {
                indices.push([m1, m2, m3]);
                let b = rlat.vectors();
                points.push((b[0] * m1 as f64 + b[1] * m2 as f64 + b[2] * m3 as f64) / l as f64);
            }
        }
    }
    Ok(KGrid { l, indices, points })
}

impl KGrid {
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    /// Integer numerators `m` with `Q = sum (m_i / L) b_i`.
    pub fn indices(&self) -> &[[i32; 3]] {
        &self.indices
    }

    /// Weight of each point in Brillouin-zone averages.
    pub fn weight(&self) -> f64 {
        1.0 / self.points.len() as f64
    }
}
