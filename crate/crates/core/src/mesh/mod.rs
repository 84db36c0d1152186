//! Curved tetrahedral meshes.
//!
//! Each cell carries a polynomial geometric map `T_i : K → Ω` of degree
//! 1..=3, interpolating the cell's geometry nodes in the Lagrange node order
//! of [`crate::basis`]. Cells sharing a facet are glued through a permutation
//! of reference vertices, so reference points on a shared facet can be moved
//! across without going through world space.

mod adjacency;
mod locate;

use std::fmt;

pub use adjacency::{build_adjacency, Adjacency, Neighbor};
pub use locate::BinGrid;

use crate::basis::{vertex_node, BasisError, LagrangeBasis};
use crate::linalg::{self, Mat3, Vec3};
use crate::refcell::{self, FacetId, RefPoint};
use crate::scalar::Real;

pub const MAX_GEOM_DEGREE: usize = 3;
pub const DEFAULT_NEWTON_ITERS: usize = 20;

/// Index of a mesh cell, or [`CellId::INVALID`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId(usize);

impl CellId {
    pub const INVALID: CellId = CellId(usize::MAX);

    #[inline]
    pub fn new(index: usize) -> Self {
        debug_assert!(index != usize::MAX);
        CellId(index)
    }

    #[inline]
    pub fn is_valid(self) -> bool {
        self != Self::INVALID
    }

    /// Storage index. Panics on `INVALID`.
    #[inline]
    pub fn index(self) -> usize {
        assert!(self.is_valid(), "invalid cell id used as an index");
        self.0
    }

    pub fn get(self) -> Option<usize> {
        self.is_valid().then_some(self.0)
    }
}

impl fmt::Debug for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.get() {
            Some(i) => write!(f, "CellId({i})"),
            None => f.write_str("CellId(INVALID)"),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MeshError {
    #[error("geometry degree {0} is outside 1..=3")]
    BadGeomDegree(usize),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("cell {cell} has {got} geometry nodes, expected {expected}")]
    NodeCount { cell: usize, expected: usize, got: usize },
    #[error("cell {cell} references {what} {index} but only {len} exist")]
    IndexOutOfRange {
        cell: usize,
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("{cells} cells but {cell_vertices} cell_vertices rows")]
    CellVertexCount { cells: usize, cell_vertices: usize },
    #[error("facet with vertices {vertices:?} is shared by three or more cells")]
    NonManifold { vertices: [usize; 3] },
    #[error("cell {cell} has non-positive Jacobian determinant {det}")]
    InvertedCell { cell: usize, det: f64 },
    #[error("cell {cell} vertex {vertex} does not coincide with its geometry node (gap {gap})")]
    VertexMismatch { cell: usize, vertex: usize, gap: f64 },
    #[error("facet {facet} of cell {cell} does not match its neighbour (gap {gap})")]
    NonConforming { cell: usize, facet: usize, gap: f64 },
}

/// Newton inversion of a geometric map failed.
#[derive(Debug, Clone, Copy, thiserror::Error, PartialEq)]
pub enum NewtonError {
    #[error("Newton iteration did not converge")]
    NotConverged,
    #[error("singular Jacobian during Newton iteration")]
    Singular,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb<T> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    pub fn empty() -> Self {
        Self {
            min: [T::infinity(); 3],
            max: [T::neg_infinity(); 3],
        }
    }

    pub fn grow(&mut self, p: Vec3<T>) {
        for k in 0..3 {
            self.min[k] = self.min[k].min(p[k]);
            self.max[k] = self.max[k].max(p[k]);
        }
    }

    pub fn inflate(&self, d: T) -> Self {
        Self {
            min: [self.min[0] - d, self.min[1] - d, self.min[2] - d],
            max: [self.max[0] + d, self.max[1] + d, self.max[2] + d],
        }
    }

    pub fn contains(&self, p: Vec3<T>) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    pub fn diameter(&self) -> T {
        linalg::dist(self.min, self.max)
    }
}

/// Curved tetrahedral mesh with per-cell polynomial geometric maps.
#[derive(Clone, Debug)]
pub struct Mesh<T> {
    geom_degree: usize,
    basis: LagrangeBasis<T>,
    vertices: Vec<Vec3<T>>,
    geom_nodes: Vec<Vec3<T>>,
    /// `cells.len() / nodes_per_cell` rows of geometry node indices.
    cells: Vec<usize>,
    cell_vertices: Vec<[usize; 4]>,
    adjacency: Adjacency,
    /// Monomial coefficients of each `T_i`, cell-major then monomial-major, 3 components.
    geom_poly: Vec<T>,
    bboxes: Vec<Aabb<T>>,
    bounds: Aabb<T>,
    grid: BinGrid<T>,
}

impl<T: Real> Mesh<T> {
    /// Builds and validates a mesh: index ranges, adjacency, Jacobian
    /// positivity at geometry nodes and centroids, and facet conformity.
    pub fn new(
        geom_degree: usize,
        vertices: Vec<Vec3<T>>,
        geom_nodes: Vec<Vec3<T>>,
        cells: Vec<Vec<usize>>,
        cell_vertices: Vec<[usize; 4]>,
    ) -> Result<Self, MeshError> {
        if !(1..=MAX_GEOM_DEGREE).contains(&geom_degree) {
            return Err(MeshError::BadGeomDegree(geom_degree));
        }
        let basis = LagrangeBasis::<T>::new(geom_degree)?;
        let npc = basis.node_count();
        if cells.len() != cell_vertices.len() {
            return Err(MeshError::CellVertexCount {
                cells: cells.len(),
                cell_vertices: cell_vertices.len(),
            });
        }
        let mut flat = Vec::with_capacity(cells.len() * npc);
        for (c, row) in cells.iter().enumerate() {
            if row.len() != npc {
                return Err(MeshError::NodeCount {
                    cell: c,
                    expected: npc,
                    got: row.len(),
                });
            }
            for &n in row {
                if n >= geom_nodes.len() {
                    return Err(MeshError::IndexOutOfRange {
                        cell: c,
                        what: "geometry node",
                        index: n,
                        len: geom_nodes.len(),
                    });
                }
            }
            for &v in &cell_vertices[c] {
                if v >= vertices.len() {
                    return Err(MeshError::IndexOutOfRange {
                        cell: c,
                        what: "vertex",
                        index: v,
                        len: vertices.len(),
                    });
                }
            }
            flat.extend_from_slice(row);
        }
        let adjacency = build_adjacency(&cell_vertices)?;

        let mut geom_poly = Vec::with_capacity(cells.len() * npc * 3);
        let mut bboxes = Vec::with_capacity(cells.len());
        let mut bounds = Aabb::empty();
        let mut nodal = vec![T::zero(); npc * 3];
        for row in flat.chunks_exact(npc) {
            let mut bb = Aabb::empty();
            for (j, &n) in row.iter().enumerate() {
                nodal[j * 3..j * 3 + 3].copy_from_slice(&geom_nodes[n]);
                bb.grow(geom_nodes[n]);
            }
            geom_poly.extend(basis.nodal_to_monomial(&nodal, 3));
            // Curved faces can bulge past the node hull.
            let bb = bb.inflate(T::lit(0.1) * bb.diameter());
            bounds.grow(bb.min);
            bounds.grow(bb.max);
            bboxes.push(bb);
        }
        let grid = BinGrid::new(&bboxes, bounds);
        let mesh = Self {
            geom_degree,
            basis,
            vertices,
            geom_nodes,
            cells: flat,
            cell_vertices,
            adjacency,
            geom_poly,
            bboxes,
            bounds,
            grid,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    fn tolerance(&self) -> T {
        let scale = T::one() + self.bounds.diameter();
        T::lit(1e-9).max(T::epsilon() * T::lit(1e4)) * scale
    }

    fn validate(&self) -> Result<(), MeshError> {
        let tol = self.tolerance();
        let g = self.geom_degree;
        for c in 0..self.num_cells() {
            let cell = CellId::new(c);
            for (v, &gv) in self.cell_vertices[c].iter().enumerate() {
                let node = self.cell_nodes(cell)[vertex_node(g, v)];
                let gap = linalg::dist(self.vertices[gv], self.geom_nodes[node]);
                if !(gap <= tol) {
                    return Err(MeshError::VertexMismatch {
                        cell: c,
                        vertex: v,
                        gap: gap.to_f64_lossy(),
                    });
                }
            }
            let centroid = refcell::centroid();
            for xi in self.basis.nodes().iter().chain(std::iter::once(&centroid)) {
                let d = linalg::det(&self.geom_jacobian(cell, xi));
                if !(d > T::zero()) {
                    return Err(MeshError::InvertedCell {
                        cell: c,
                        det: d.to_f64_lossy(),
                    });
                }
            }
            for f in FacetId::ALL {
                let Some(nb) = self.adjacency[c][f.index()] else {
                    continue;
                };
                if nb.cell.index() < c {
                    continue;
                }
                let zero = T::lit(1e-12);
                for xi in self.basis.nodes() {
                    if xi.barycentric()[f.index()].abs() > zero {
                        continue;
                    }
                    let (other, oxi) = self.transfer(cell, f, xi).expect("interior facet");
                    let gap = linalg::dist(self.geom_map(cell, xi), self.geom_map(other, &oxi));
                    if !(gap <= tol) {
                        return Err(MeshError::NonConforming {
                            cell: c,
                            facet: f.index(),
                            gap: gap.to_f64_lossy(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn geom_degree(&self) -> usize {
        self.geom_degree
    }

    pub fn num_cells(&self) -> usize {
        self.cell_vertices.len()
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn geom_nodes(&self) -> &[Vec3<T>] {
        &self.geom_nodes
    }

    pub fn geom_basis(&self) -> &LagrangeBasis<T> {
        &self.basis
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.basis.node_count()
    }

    pub fn cell_nodes(&self, cell: CellId) -> &[usize] {
        let n = self.nodes_per_cell();
        &self.cells[cell.index() * n..(cell.index() + 1) * n]
    }

    pub fn cell_vertices(&self) -> &[[usize; 4]] {
        &self.cell_vertices
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn neighbor(&self, cell: CellId, facet: FacetId) -> Option<Neighbor> {
        self.adjacency[cell.index()][facet.index()]
    }

    pub fn cell_bbox(&self, cell: CellId) -> &Aabb<T> {
        &self.bboxes[cell.index()]
    }

    /// Union of the inflated cell boxes.
    pub fn bounds(&self) -> &Aabb<T> {
        &self.bounds
    }

    fn poly(&self, cell: CellId) -> &[T] {
        let n = self.nodes_per_cell() * 3;
        &self.geom_poly[cell.index() * n..(cell.index() + 1) * n]
    }

    /// `T_i(ξ)`
    #[inline]
    pub fn geom_map(&self, cell: CellId, xi: &RefPoint<T>) -> Vec3<T> {
        self.basis.monomials().eval_poly::<T, 3>(self.poly(cell), &xi.xi)
    }

    /// `DT_i(ξ)`, row `k` is the reference gradient of world component `k`.
    #[inline]
    pub fn geom_jacobian(&self, cell: CellId, xi: &RefPoint<T>) -> Mat3<T> {
        self.basis.monomials().eval_poly_grad::<T, 3>(self.poly(cell), &xi.xi).1
    }

    /// World point and Jacobian together.
    #[inline]
    pub fn geom_map_jacobian(&self, cell: CellId, xi: &RefPoint<T>) -> (Vec3<T>, Mat3<T>) {
        self.basis.monomials().eval_poly_grad::<T, 3>(self.poly(cell), &xi.xi)
    }

    /// World point, Jacobian and the reference Hessian of each world component.
    pub fn geom_second_order(&self, cell: CellId, xi: &RefPoint<T>) -> (Vec3<T>, Mat3<T>, [Mat3<T>; 3]) {
        self.basis.monomials().eval_poly_hess::<T, 3>(self.poly(cell), &xi.xi)
    }

    /// Newton inversion of `T_i` starting from the reference centroid.
    pub fn newton_invert(
        &self,
        cell: CellId,
        x: Vec3<T>,
        tol: T,
        max_iter: usize,
    ) -> Result<RefPoint<T>, NewtonError> {
        self.newton_invert_from(cell, x, refcell::centroid(), tol, max_iter)
            .map(|(xi, _)| xi)
    }

    /// Newton inversion of `T_i` from a given start; returns the point and the
    /// number of updates taken. The result is not required to lie in `K`.
    pub fn newton_invert_from(
        &self,
        cell: CellId,
        x: Vec3<T>,
        start: RefPoint<T>,
        tol: T,
        max_iter: usize,
    ) -> Result<(RefPoint<T>, usize), NewtonError> {
        let min_det = T::lit(1e-14).max(T::min_positive_value());
        let far = T::lit(1e3);
        let mut xi = start;
        for it in 0..=max_iter {
            let (y, jac) = self.geom_map_jacobian(cell, &xi);
            let r = linalg::sub(y, x);
            if linalg::norm(r) <= tol {
                return Ok((xi, it));
            }
            if it == max_iter {
                break;
            }
            let inv = linalg::inverse(&jac, min_det).ok_or(NewtonError::Singular)?;
            xi = xi.offset(linalg::mat_vec(&inv, r), -T::one());
            if !xi.xi.iter().all(|c| c.abs() < far) {
                break;
            }
        }
        Err(NewtonError::NotConverged)
    }

    /// Moves a point on `facet` of `cell` to the neighbouring cell through the
    /// vertex correspondence. `None` on a boundary facet.
    pub fn transfer(&self, cell: CellId, facet: FacetId, xi: &RefPoint<T>) -> Option<(CellId, RefPoint<T>)> {
        let nb = self.neighbor(cell, facet)?;
        let b = xi.barycentric();
        let mut out = [T::zero(); 4];
        let mut sum = T::zero();
        for v in 0..4 {
            if v != facet.index() {
                out[nb.corner_map[v] as usize] = b[v];
                sum += b[v];
            }
        }
        if sum > T::zero() {
            for w in out.iter_mut() {
                *w /= sum;
            }
        }
        Some((nb.cell, RefPoint::from_barycentric(out)))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::basis::LagrangeBasis;

    /// One cell whose geometry nodes are `map` applied to the reference nodes.
    pub fn single_cell(g: usize, map: impl Fn([f64; 3]) -> [f64; 3]) -> Mesh<f64> {
        let b = LagrangeBasis::<f64>::new(g).unwrap();
        let nodes: Vec<_> = b.nodes().iter().map(|n| map(n.xi)).collect();
        let verts: Vec<_> = (0..4).map(|v| nodes[vertex_node(g, v)]).collect();
        let cells = vec![(0..nodes.len()).collect()];
        Mesh::new(g, verts, nodes, cells, vec![[0, 1, 2, 3]]).unwrap()
    }

    fn curved(p: [f64; 3]) -> [f64; 3] {
        [
            p[0] + 0.1 * p[1] * p[1],
            p[1] + 0.05 * p[0] * p[2],
            p[2] + 0.1 * p[0] * p[0] * p[1] - 0.05 * p[1],
        ]
    }

    #[test]
    fn identity_cell() {
        let m = single_cell(1, |p| p);
        let c = CellId::new(0);
        let xi = RefPoint::new(0.25, 0.25, 0.25);
        assert_eq!(m.geom_map(c, &xi), [0.25; 3]);
        assert_eq!(m.geom_jacobian(c, &xi), linalg::identity::<f64>());
        let r = m.newton_invert_from(c, [0.3, 0.3, 0.2], refcell::centroid(), 1e-12, 20).unwrap();
        assert!(linalg::dist(r.0.xi, [0.3, 0.3, 0.2]) < 1e-15);
        assert_eq!(r.1, 1);
    }

    #[test]
    fn scaled_cell_jacobian() {
        let m = single_cell(1, |p| linalg::scale(p, 2.0));
        let j = m.geom_jacobian(CellId::new(0), &RefPoint::new(0.1, 0.2, 0.3));
        assert_eq!(j, linalg::mat_scale(&linalg::identity(), 2.0));
    }

    #[test]
    fn nodal_property_of_map() {
        let m = single_cell(3, curved);
        for (k, n) in m.geom_basis().nodes().iter().enumerate() {
            let x = m.geom_map(CellId::new(0), n);
            assert!(linalg::dist(x, m.geom_nodes()[k]) < 1e-13);
        }
    }

    #[test]
    fn curved_jacobian_matches_finite_difference() {
        let m = single_cell(3, curved);
        let c = CellId::new(0);
        let xi = RefPoint::new(0.2, 0.3, 0.1);
        let j = m.geom_jacobian(c, &xi);
        let h = 1e-6;
        for k in 0..3 {
            let mut d = [0.0; 3];
            d[k] = 1.0;
            let fp = m.geom_map(c, &xi.offset(d, h));
            let fm = m.geom_map(c, &xi.offset(d, -h));
            for i in 0..3 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!((j[i][k] - fd).abs() <= 1e-6 * fd.abs().max(1e-2), "{} {}", j[i][k], fd);
            }
        }
    }

    #[test]
    fn newton_round_trip_curved() {
        let m = single_cell(3, curved);
        let c = CellId::new(0);
        for xi in [RefPoint::new(0.1, 0.2, 0.3), RefPoint::new(0.7, 0.1, 0.1), RefPoint::new(0.0, 0.0, 0.99)] {
            let x = m.geom_map(c, &xi);
            let back = m.newton_invert(c, x, 1e-13, 20).unwrap();
            assert!(linalg::dist(back.xi, xi.xi) < 1e-10);
        }
    }

    #[test]
    fn newton_far_point_is_not_inside() {
        let m = single_cell(3, curved);
        match m.newton_invert(CellId::new(0), [50.0, -40.0, 30.0], 1e-12, 20) {
            Err(_) => {}
            Ok(xi) => assert!(!refcell::inside(&xi, 1e-9)),
        }
    }

    #[test]
    fn inverted_cell_rejected() {
        let b = LagrangeBasis::<f64>::new(1).unwrap();
        let nodes: Vec<_> = b.nodes().iter().map(|n| [n.xi[1], n.xi[0], n.xi[2]]).collect();
        let verts: Vec<_> = (0..4).map(|v| nodes[vertex_node(1, v)]).collect();
        let err = Mesh::new(1, verts, nodes, vec![vec![0, 1, 2, 3]], vec![[0, 1, 2, 3]]).unwrap_err();
        assert!(matches!(err, MeshError::InvertedCell { .. }));
    }

    #[test]
    fn wrong_node_count_rejected() {
        let err = Mesh::<f64>::new(2, vec![[0.0; 3]; 4], vec![[0.0; 3]; 10], vec![vec![0, 1, 2, 3]], vec![[0, 1, 2, 3]])
            .unwrap_err();
        assert_eq!(err, MeshError::NodeCount { cell: 0, expected: 10, got: 4 });
    }

    #[test]
    fn invalid_cell_id() {
        assert!(!CellId::INVALID.is_valid());
        assert_eq!(CellId::INVALID.get(), None);
        assert_eq!(CellId::new(3).get(), Some(3));
    }
}
