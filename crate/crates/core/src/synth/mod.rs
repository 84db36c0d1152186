//! Deterministic test geometries: box, cylinder shell, solid cylinder and
//! sphere shell, with curved cells whose geometry nodes sit on the exact
//! analytic shape.
//!
//! Every shape is a structured integer lattice pushed through an analytic
//! map. Each lattice cube is split into six tetrahedra around the diagonal
//! pointing away from the lattice origin; cubes in different octants use
//! mirrored splits. The split is conforming, and it keeps every tetrahedron
//! on one side of the planes `|q_i| = |q_j|`, which is where the
//! square-to-disc and cube-to-sphere maps below are non-smooth.

mod functions;

use std::collections::HashMap;
use std::f64::consts::PI;

pub use functions::{builtin_function, Builtin, UnknownFunction};

use crate::basis::exponents;
use crate::linalg::Vec3;
use crate::mesh::{Mesh, MeshError};
use crate::scalar::Real;

/// Shape of a synthetic mesh. Cylinders are centred on `z = 0` with the
/// z-axis as symmetry axis; spheres are centred on the origin.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// Axis-aligned box `[min, max]` with `divisions` cubes per axis.
    Box {
        min: [f64; 3],
        max: [f64; 3],
        divisions: [usize; 3],
    },
    /// `divisions = [radial, angular, axial]`.
    CylinderShell {
        r_in: f64,
        r_out: f64,
        height: f64,
        divisions: [usize; 3],
    },
    /// Square core plus annulus; `divisions = [core half-width, annulus, axial]`.
    SolidCylinder {
        r: f64,
        height: f64,
        divisions: [usize; 3],
    },
    /// Cubed-sphere shell; `divisions = [half face width, radial]`.
    SphereShell {
        r_in: f64,
        r_out: f64,
        divisions: [usize; 2],
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub shape: Shape,
    pub geom_degree: usize,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SynthError {
    #[error("invalid shape parameters: {0}")]
    BadSpec(String),
    #[error("synthesised mesh failed validation: {0}")]
    Mesh(#[from] MeshError),
}

struct Lattice<'a> {
    /// Cube index ranges per axis, half-open.
    lo: [i64; 3],
    hi: [i64; 3],
    include: Box<dyn Fn([i64; 3]) -> bool + 'a>,
    /// Axis and period of a wrapped lattice direction.
    periodic: Option<(usize, i64)>,
    map: Box<dyn Fn([f64; 3]) -> [f64; 3] + 'a>,
}

pub fn make_mesh<T: Real>(spec: &SynthSpec) -> Result<Mesh<T>, SynthError> {
    let bad = |msg: &str| Err(SynthError::BadSpec(msg.to_string()));
    if !(1..=3).contains(&spec.geom_degree) {
        return bad("geometry degree must be 1..=3");
    }
    let lattice = match spec.shape {
        Shape::Box { min, max, divisions } => {
            if divisions.contains(&0) {
                return bad("divisions must be >= 1");
            }
            if (0..3).any(|k| !(max[k] > min[k])) {
                return bad("box max must exceed min");
            }
            let n = divisions.map(|d| d as f64);
            Lattice {
                lo: [0; 3],
                hi: divisions.map(|d| d as i64),
                include: Box::new(|_| true),
                periodic: None,
                map: Box::new(move |q| {
                    [0, 1, 2].map(|k| min[k] + (max[k] - min[k]) * q[k] / n[k])
                }),
            }
        }
        Shape::CylinderShell {
            r_in,
            r_out,
            height,
            divisions,
        } => {
            if divisions.contains(&0) {
                return bad("divisions must be >= 1");
            }
            if !(r_in > 0.0 && r_in < r_out && height > 0.0) {
                return bad("need 0 < r_in < r_out and height > 0");
            }
            if divisions[1] < 3 {
                return bad("at least 3 angular divisions");
            }
            let [nr, nt, nz] = divisions.map(|d| d as f64);
            Lattice {
                lo: [0; 3],
                hi: divisions.map(|d| d as i64),
                include: Box::new(|_| true),
                periodic: Some((1, divisions[1] as i64)),
                map: Box::new(move |q| {
                    let r = r_in + (r_out - r_in) * q[0] / nr;
                    let th = 2.0 * PI * q[1] / nt;
                    [r * th.cos(), r * th.sin(), height * (q[2] / nz - 0.5)]
                }),
            }
        }
        Shape::SolidCylinder { r, height, divisions } => {
            if divisions.contains(&0) {
                return bad("divisions must be >= 1");
            }
            if !(r > 0.0 && height > 0.0) {
                return bad("need r > 0 and height > 0");
            }
            let [nc, na, nz] = divisions.map(|d| d as f64);
            let n = (divisions[0] + divisions[1]) as i64;
            // Core half-width matched to the lattice spacing.
            let a = r * nc / (nc + na);
            Lattice {
                lo: [-n, -n, 0],
                hi: [n, n, divisions[2] as i64],
                include: Box::new(|_| true),
                periodic: None,
                map: Box::new(move |q| {
                    let m = q[0].abs().max(q[1].abs());
                    let xy = if m <= nc {
                        [a * q[0] / nc, a * q[1] / nc]
                    } else {
                        let alpha = (m - nc) / na;
                        let l2 = (q[0] * q[0] + q[1] * q[1]).sqrt();
                        [0, 1].map(|k| (1.0 - alpha) * a * q[k] / m + alpha * r * q[k] / l2)
                    };
                    [xy[0], xy[1], height * (q[2] / nz - 0.5)]
                }),
            }
        }
        Shape::SphereShell {
            r_in,
            r_out,
            divisions,
        } => {
            if divisions.contains(&0) {
                return bad("divisions must be >= 1");
            }
            if !(r_in > 0.0 && r_in < r_out) {
                return bad("need 0 < r_in < r_out");
            }
            let nf = divisions[0] as i64;
            let nr = divisions[1] as f64;
            let n = nf + divisions[1] as i64;
            let nff = nf as f64;
            Lattice {
                lo: [-n; 3],
                hi: [n; 3],
                include: Box::new(move |c| {
                    // cube centre outside the inner cube
                    c.iter().map(|&ci| (2 * ci + 1).abs()).max().unwrap() > 2 * nf
                }),
                periodic: None,
                map: Box::new(move |q| {
                    let m = q[0].abs().max(q[1].abs()).max(q[2].abs());
                    let rad = r_in + (r_out - r_in) * (m - nff) / nr;
                    let l2 = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
                    [0, 1, 2].map(|k| rad * q[k] / l2)
                }),
            }
        }
    };
    Ok(build(&lattice, spec.geom_degree)?)
}

/// The six tetrahedra of the unit cube around the diagonal `0 → (1,1,1)`.
const KUHN: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn build<T: Real>(lat: &Lattice<'_>, g: usize) -> Result<Mesh<T>, MeshError> {
    let gi = g as i64;
    let wrap = |mut p: [i64; 3], scale: i64| {
        if let Some((axis, period)) = lat.periodic {
            p[axis] = p[axis].rem_euclid(period * scale);
        }
        p
    };
    let mut vert_ids: HashMap<[i64; 3], usize> = HashMap::new();
    let mut vertices: Vec<Vec3<T>> = Vec::new();
    let mut node_ids: HashMap<[i64; 3], usize> = HashMap::new();
    let mut nodes: Vec<Vec3<T>> = Vec::new();
    let mut cells = Vec::new();
    let mut cell_vertices = Vec::new();
    let exps = exponents(g);
    let to_world = |p: [f64; 3]| -> Vec3<T> { (lat.map)(p).map(T::lit) };

    for i in lat.lo[0]..lat.hi[0] {
        for j in lat.lo[1]..lat.hi[1] {
            for k in lat.lo[2]..lat.hi[2] {
                let c = [i, j, k];
                if !(lat.include)(c) {
                    continue;
                }
                // Mirror the split so its diagonal points away from the origin.
                let mut base = c;
                let mut dir = [1i64; 3];
                for a in 0..3 {
                    let centre2 = 2 * c[a] + 1;
                    if lat.lo[a] < 0 && centre2 < 0 {
                        base[a] = c[a] + 1;
                        dir[a] = -1;
                    }
                }
                for perm in KUHN {
                    let mut corners = [base; 4];
                    for s in 1..4 {
                        corners[s] = corners[s - 1];
                        let ax = perm[s - 1];
                        corners[s][ax] += dir[ax];
                    }
                    if lattice_det(&corners) < 0 {
                        corners.swap(1, 2);
                    }
                    let mut cv = [0usize; 4];
                    for (v, p) in corners.iter().enumerate() {
                        let key = wrap(*p, 1);
                        cv[v] = *vert_ids.entry(key).or_insert_with(|| {
                            vertices.push(to_world(p.map(|x| x as f64)));
                            vertices.len() - 1
                        });
                    }
                    let mut row = Vec::with_capacity(exps.len());
                    for e in &exps {
                        let [a, b, cc] = [e[0] as i64, e[1] as i64, e[2] as i64];
                        let w = [gi - a - b - cc, a, b, cc];
                        let mut r = [0i64; 3];
                        for (wv, p) in w.iter().zip(&corners) {
                            for ax in 0..3 {
                                r[ax] += wv * p[ax];
                            }
                        }
                        let key = wrap(r, gi);
                        let id = *node_ids.entry(key).or_insert_with(|| {
                            nodes.push(to_world(r.map(|x| x as f64 / g as f64)));
                            nodes.len() - 1
                        });
                        row.push(id);
                    }
                    cells.push(row);
                    cell_vertices.push(cv);
                }
            }
        }
    }
    Mesh::new(g, vertices, nodes, cells, cell_vertices)
}

fn lattice_det(p: &[[i64; 3]; 4]) -> i64 {
    let d = |s: usize| [p[s][0] - p[0][0], p[s][1] - p[0][1], p[s][2] - p[0][2]];
    let (a, b, c) = (d(1), d(2), d(3));
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::mesh::CellId;
    use crate::refcell::{self, FacetId, RefPoint};

    pub fn unit_box(div: usize, g: usize) -> Mesh<f64> {
        make_mesh(&SynthSpec {
            shape: Shape::Box {
                min: [0.0; 3],
                max: [1.0; 3],
                divisions: [div; 3],
            },
            geom_degree: g,
        })
        .unwrap()
    }

    #[test]
    fn single_cube_box() {
        let m = unit_box(1, 1);
        assert_eq!(m.num_cells(), 6);
        assert_eq!(m.vertices().len(), 8);
        for c in 0..6 {
            let j0 = m.geom_jacobian(CellId::new(c), &refcell::centroid());
            let j1 = m.geom_jacobian(CellId::new(c), &RefPoint::new(0.7, 0.1, 0.1));
            assert_eq!(j0, j1);
        }
    }

    /// Each interior facet is seen from exactly two cells and each boundary
    /// facet once; on an n³ box the boundary holds 6·2·n² triangles and
    /// 4·cells = 2·interior + boundary.
    #[test]
    fn box_facet_counts() {
        for n in 1..=3 {
            let m = unit_box(n, 1);
            let cells = m.num_cells();
            assert_eq!(cells, 6 * n * n * n);
            let boundary = m.adjacency().iter().flatten().filter(|x| x.is_none()).count();
            let interior_sides = m.adjacency().iter().flatten().filter(|x| x.is_some()).count();
            assert_eq!(boundary, 12 * n * n);
            assert_eq!(interior_sides % 2, 0);
            assert_eq!(4 * cells, interior_sides + boundary);
            // symmetric pairing
            for (c, row) in m.adjacency().iter().enumerate() {
                for (f, nb) in row.iter().enumerate() {
                    if let Some(nb) = nb {
                        let back = m.neighbor(nb.cell, nb.facet).unwrap();
                        assert_eq!((back.cell.index(), back.facet.index()), (c, f));
                    }
                }
            }
        }
    }

    fn cyl_shell(g: usize) -> Mesh<f64> {
        make_mesh(&SynthSpec {
            shape: Shape::CylinderShell {
                r_in: 1.0,
                r_out: 2.0,
                height: 1.0,
                divisions: [2, 12, 2],
            },
            geom_degree: g,
        })
        .unwrap()
    }

    #[test]
    fn cylinder_shell_boundary_nodes_on_surfaces() {
        let m = cyl_shell(3);
        let mut on_surface = 0;
        for (c, row) in m.adjacency().iter().enumerate() {
            for (f, nb) in row.iter().enumerate() {
                if nb.is_some() {
                    continue;
                }
                let fid = FacetId::new(f).unwrap();
                for (k, xi) in m.geom_basis().nodes().iter().enumerate() {
                    if xi.barycentric()[f].abs() > 1e-12 {
                        continue;
                    }
                    let x = m.geom_nodes()[m.cell_nodes(CellId::new(c))[k]];
                    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                    let on_cap = (x[2].abs() - 0.5).abs() < 1e-12;
                    if !on_cap {
                        assert!((r - 1.0).abs() < 1e-12 || (r - 2.0).abs() < 1e-12, "r={r}");
                        on_surface += 1;
                    }
                    let _ = fid;
                }
            }
        }
        assert!(on_surface > 0);
    }

    #[test]
    fn curved_facet_point_lies_on_cylinder() {
        // geom_map at a facet node of a boundary facet reproduces the exact radius
        let m = cyl_shell(3);
        for (c, row) in m.adjacency().iter().enumerate() {
            for (f, nb) in row.iter().enumerate() {
                if nb.is_none() {
                    for xi in m.geom_basis().nodes() {
                        if xi.barycentric()[f].abs() < 1e-12 {
                            let x = m.geom_map(CellId::new(c), xi);
                            if (x[2].abs() - 0.5).abs() > 1e-9 {
                                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                                assert!((r - 1.0).abs() < 1e-9 || (r - 2.0).abs() < 1e-9);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn transfer_matches_world_on_cylinder() {
        use rand::{Rng, SeedableRng};
        let m = cyl_shell(3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        for c in 0..m.num_cells() {
            let cell = CellId::new(c);
            for f in FacetId::ALL {
                if m.neighbor(cell, f).is_none() {
                    continue;
                }
                let corners = f.corners();
                let w: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
                let s: f64 = w.iter().sum();
                let mut b = [0.0; 4];
                for (i, &v) in corners.iter().enumerate() {
                    b[v] = w[i] / s;
                }
                let xi = RefPoint::from_barycentric(b);
                let (other, oxi) = m.transfer(cell, f, &xi).unwrap();
                assert!(linalg::dist(m.geom_map(cell, &xi), m.geom_map(other, &oxi)) <= 1e-8);
                // reverse transfer returns the original point
                let nb = m.neighbor(cell, f).unwrap();
                let (back, bxi) = m.transfer(other, nb.facet, &oxi).unwrap();
                assert_eq!(back, cell);
                assert!(linalg::dist(bxi.xi, xi.xi) <= 1e-10);
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn corner_and_centroid_transfer() {
        let m = unit_box(2, 2);
        let cell = CellId::new(0);
        let f = FacetId::ALL
            .into_iter()
            .find(|&f| m.neighbor(cell, f).is_some())
            .unwrap();
        let nb = m.neighbor(cell, f).unwrap();
        let v = f.corners()[0];
        let (_, oxi) = m.transfer(cell, f, &refcell::vertex(v)).unwrap();
        assert_eq!(oxi, refcell::vertex(nb.corner_map[v] as usize));
        let mut b = [1.0 / 3.0; 4];
        b[f.index()] = 0.0;
        let (_, oxi) = m.transfer(cell, f, &RefPoint::from_barycentric(b)).unwrap();
        let ob = oxi.barycentric();
        assert!(ob[nb.facet.index()].abs() < 1e-15);
        for (i, w) in ob.iter().enumerate() {
            if i != nb.facet.index() {
                assert!((w - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sphere_shell_and_solid_cylinder_validate() {
        let s: Mesh<f64> = make_mesh(&SynthSpec {
            shape: Shape::SphereShell {
                r_in: 1.0,
                r_out: 2.0,
                divisions: [2, 2],
            },
            geom_degree: 3,
        })
        .unwrap();
        assert_eq!(s.num_cells(), 6 * (8 * 8 * 8 - 4 * 4 * 4));
        for x in s.geom_nodes() {
            let r = linalg::norm(*x);
            assert!(r > 1.0 - 1e-12 && r < 2.0 + 1e-12);
        }
        let c: Mesh<f64> = make_mesh(&SynthSpec {
            shape: Shape::SolidCylinder {
                r: 1.5,
                height: 3.0,
                divisions: [2, 2, 3],
            },
            geom_degree: 3,
        })
        .unwrap();
        assert_eq!(c.num_cells(), 6 * 8 * 8 * 3);
    }

    #[test]
    fn coarse_cylinder_rejected() {
        let err = make_mesh::<f64>(&SynthSpec {
            shape: Shape::CylinderShell {
                r_in: 1.0,
                r_out: 2.0,
                height: 1.0,
                divisions: [1, 2, 1],
            },
            geom_degree: 3,
        })
        .unwrap_err();
        assert!(matches!(err, SynthError::BadSpec(_)));
        let err = make_mesh::<f64>(&SynthSpec {
            shape: Shape::CylinderShell {
                r_in: 0.1,
                r_out: 2.0,
                height: 1.0,
                divisions: [1, 3, 1],
            },
            geom_degree: 3,
        })
        .unwrap_err();
        assert!(matches!(err, SynthError::Mesh(MeshError::InvertedCell { .. })), "{err:?}");
    }

    #[test]
    fn affine_box_has_zero_map_hessian() {
        let m = unit_box(2, 1);
        let (_, _, h) = m.geom_second_order(CellId::new(3), &RefPoint::new(0.2, 0.3, 0.1));
        assert!(h.iter().flatten().flatten().all(|&v| v == 0.0));
    }
}
