//! Global point location: bounding-box filtered scan with Newton inversion.

use crate::linalg::Vec3;
use crate::refcell::{self, RefPoint};
use crate::scalar::Real;

use super::{Aabb, CellId, Mesh, DEFAULT_NEWTON_ITERS};

/// Uniform bins over the mesh bounds; each bin lists, in ascending order,
/// the cells whose inflated bounding box overlaps it.
#[derive(Clone, Debug)]
pub struct BinGrid<T> {
    origin: Vec3<T>,
    inv_size: Vec3<T>,
    dims: [usize; 3],
    bins: Vec<Vec<u32>>,
}

impl<T: Real> BinGrid<T> {
    pub fn new(boxes: &[Aabb<T>], bounds: Aabb<T>) -> Self {
        let per_axis = ((boxes.len() as f64).cbrt().ceil() as usize).clamp(1, 64);
        let dims = [per_axis; 3];
        let mut inv_size = [T::zero(); 3];
        for k in 0..3 {
            let ext = (bounds.max[k] - bounds.min[k]).max(T::min_positive_value());
            inv_size[k] = T::lit(dims[k] as f64) / ext;
        }
        let mut grid = Self {
            origin: bounds.min,
            inv_size,
            dims,
            bins: vec![Vec::new(); dims[0] * dims[1] * dims[2]],
        };
        for (c, bb) in boxes.iter().enumerate() {
            let lo = grid.clamped_coords(bb.min);
            let hi = grid.clamped_coords(bb.max);
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    for k in lo[2]..=hi[2] {
                        let b = grid.flat([i, j, k]);
                        grid.bins[b].push(c as u32);
                    }
                }
            }
        }
        grid
    }

    fn flat(&self, ijk: [usize; 3]) -> usize {
        (ijk[0] * self.dims[1] + ijk[1]) * self.dims[2] + ijk[2]
    }

    fn clamped_coords(&self, p: Vec3<T>) -> [usize; 3] {
        let mut out = [0; 3];
        for k in 0..3 {
            let f = ((p[k] - self.origin[k]) * self.inv_size[k]).floor();
            let f = f.to_f64_lossy();
            out[k] = if f.is_nan() || f < 0.0 {
                0
            } else {
                (f as usize).min(self.dims[k] - 1)
            };
        }
        out
    }

    /// Candidate cells for `p`, ascending; empty when `p` is outside the bins.
    pub fn candidates(&self, p: Vec3<T>) -> &[u32] {
        let mut ijk = [0; 3];
        for k in 0..3 {
            let f = ((p[k] - self.origin[k]) * self.inv_size[k]).to_f64_lossy();
            if !(f >= 0.0 && f <= self.dims[k] as f64) {
                return &[];
            }
            ijk[k] = (f.floor() as usize).min(self.dims[k] - 1);
        }
        &self.bins[self.flat(ijk)]
    }
}

impl<T: Real> Mesh<T> {
    /// Finds the lowest-index cell containing `x`: candidates are cells whose
    /// inflated bounding box contains `x`, tried in ascending order; a cell is
    /// accepted when Newton converges to a point inside `K` within `tol`.
    /// If no candidate succeeds, a wider backstop scan runs over every cell
    /// whose box inflated by its full diameter contains `x`.
    pub fn locate(&self, x: Vec3<T>, tol: T) -> Option<(CellId, RefPoint<T>)> {
        let ntol = T::newton_tol() * (T::one() + crate::linalg::norm(x));
        let try_cell = |c: usize| -> Option<(CellId, RefPoint<T>)> {
            let cell = CellId::new(c);
            let xi = self.newton_invert(cell, x, ntol, DEFAULT_NEWTON_ITERS).ok()?;
            refcell::inside(&xi, tol).then_some((cell, xi))
        };
        for &c in self.grid.candidates(x) {
            let c = c as usize;
            if self.bboxes[c].contains(x) {
                if let Some(hit) = try_cell(c) {
                    return Some(hit);
                }
            }
        }
        for (c, bb) in self.bboxes.iter().enumerate() {
            if bb.contains(x) {
                continue; // already tried
            }
            if bb.inflate(bb.diameter()).contains(x) {
                if let Some(hit) = try_cell(c) {
                    return Some(hit);
                }
            }
        }
        None
    }
}
