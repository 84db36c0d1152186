//! Geometry of the reference tetrahedron
//! `K = {ξ : ξ₁, ξ₂, ξ₃ ≥ 0, ξ₁ + ξ₂ + ξ₃ ≤ 1}`.
//!
//! Reference vertices are numbered `v0 = (0,0,0)`, `v1 = (1,0,0)`,
//! `v2 = (0,1,0)`, `v3 = (0,0,1)`. Facet `f` is the face opposite vertex `f`,
//! so every point on facet `f` has barycentric coordinate `b_f = 0`.

use crate::linalg::Vec3;
use crate::scalar::Real;

/// A point in reference coordinates. It may lie outside `K`; polynomial
/// bases extend globally.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct RefPoint<T> {
    pub xi: Vec3<T>,
}

impl<T: Real> RefPoint<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { xi: [x, y, z] }
    }

    /// Reference point with the given barycentric weights (the first weight
    /// belongs to `v0` and is implied).
    #[inline]
    pub fn from_barycentric(b: [T; 4]) -> Self {
        Self { xi: [b[1], b[2], b[3]] }
    }

    #[inline]
    pub fn barycentric(&self) -> [T; 4] {
        barycentric(self)
    }

    #[inline]
    pub fn offset(&self, dir: Vec3<T>, t: T) -> Self {
        Self {
            xi: crate::linalg::axpy(self.xi, t, dir),
        }
    }

    pub fn midpoint(&self, other: &Self) -> Self {
        let h = T::lit(0.5);
        Self {
            xi: [
                (self.xi[0] + other.xi[0]) * h,
                (self.xi[1] + other.xi[1]) * h,
                (self.xi[2] + other.xi[2]) * h,
            ],
        }
    }
}

/// Facet of the reference tetrahedron, `0..4`; facet `f` is opposite vertex `f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FacetId(u8);

impl FacetId {
    pub const ALL: [FacetId; 4] = [FacetId(0), FacetId(1), FacetId(2), FacetId(3)];

    pub fn new(id: usize) -> Option<Self> {
        (id < 4).then_some(FacetId(id as u8))
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// The three reference vertices spanning this facet, ascending.
    pub fn corners(self) -> [usize; 3] {
        let mut out = [0; 3];
        let mut k = 0;
        for v in 0..4 {
            if v != self.index() {
                out[k] = v;
                k += 1;
            }
        }
        out
    }
}

/// Reference coordinates of reference vertex `v`.
pub fn vertex<T: Real>(v: usize) -> RefPoint<T> {
    let mut xi = [T::zero(); 3];
    if v > 0 {
        xi[v - 1] = T::one();
    }
    RefPoint { xi }
}

#[inline]
pub fn barycentric<T: Real>(p: &RefPoint<T>) -> [T; 4] {
    let [a, b, c] = p.xi;
    [T::one() - a - b - c, a, b, c]
}

#[inline]
pub fn min_barycentric<T: Real>(p: &RefPoint<T>) -> T {
    let b = barycentric(p);
    b[0].min(b[1]).min(b[2]).min(b[3])
}

/// True iff every barycentric coordinate is `≥ -tol`.
#[inline]
pub fn inside<T: Real>(p: &RefPoint<T>, tol: T) -> bool {
    // Written so that NaN coordinates are never inside.
    let b = barycentric(p);
    b.iter().all(|&c| c >= -tol)
}

pub fn centroid<T: Real>() -> RefPoint<T> {
    let q = T::lit(0.25);
    RefPoint { xi: [q, q, q] }
}

/// Projects a point onto `K` by zeroing negative barycentric coordinates and
/// renormalising.
pub fn clamp_to_cell<T: Real>(p: &RefPoint<T>) -> RefPoint<T> {
    let mut b = barycentric(p);
    if b.iter().all(|&c| c >= T::zero()) {
        return *p;
    }
    let mut sum = T::zero();
    for c in b.iter_mut() {
        if *c < T::zero() {
            *c = T::zero();
        }
        sum += *c;
    }
    if sum <= T::zero() {
        return centroid();
    }
    for c in b.iter_mut() {
        *c /= sum;
    }
    RefPoint::from_barycentric(b)
}

/// Result of a ray leaving the reference cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exit<T> {
    pub t: T,
    pub facet: FacetId,
}

/// Smallest `t ≥ 0` at which `p + t·dir` crosses the boundary of `K`
/// outward, with the crossed facet. Facets crossed at equal `t` (within
/// round-off) resolve to the lower id. `None` for a degenerate direction.
pub fn exit_time<T: Real>(p: &RefPoint<T>, dir: Vec3<T>) -> Option<Exit<T>> {
    let floor = T::lit(1e-300).max(T::min_positive_value());
    if !(crate::linalg::norm(dir) >= floor) {
        return None;
    }
    let b = barycentric(p);
    let db = [-(dir[0] + dir[1] + dir[2]), dir[0], dir[1], dir[2]];
    let tie = T::epsilon() * T::lit(64.0);
    let mut best: Option<Exit<T>> = None;
    for f in 0..4 {
        if db[f] < T::zero() {
            let t = b[f].max(T::zero()) / -db[f];
            let better = match best {
                None => true,
                Some(e) => t < e.t - tie * (T::one() + e.t.abs()),
            };
            if better {
                best = Some(Exit {
                    t,
                    facet: FacetId(f as u8),
                });
            }
        }
    }
    best
}
