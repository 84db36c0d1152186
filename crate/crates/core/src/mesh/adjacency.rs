use std::collections::HashMap;

use crate::refcell::FacetId;

use super::{CellId, MeshError};

/// The cell across one facet, with the reference-vertex correspondence σ.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Neighbor {
    pub cell: CellId,
    /// The neighbour's facet that is glued to ours.
    pub facet: FacetId,
    /// `corner_map[v]` is the neighbour's local vertex matching our local
    /// vertex `v`; our opposite vertex maps to the neighbour's opposite one.
    pub corner_map: [u8; 4],
}

pub type Adjacency = Vec<[Option<Neighbor>; 4]>;

/// Pairs facets by their sorted corner-vertex triple.
pub fn build_adjacency(cell_vertices: &[[usize; 4]]) -> Result<Adjacency, MeshError> {
    let mut by_key: HashMap<[usize; 3], Vec<(usize, FacetId)>> = HashMap::new();
    for (c, verts) in cell_vertices.iter().enumerate() {
        for f in FacetId::ALL {
            let corners = f.corners();
            let mut key = [verts[corners[0]], verts[corners[1]], verts[corners[2]]];
            key.sort_unstable();
            by_key.entry(key).or_default().push((c, f));
        }
    }
    let mut adj: Adjacency = vec![[None; 4]; cell_vertices.len()];
    for (key, sides) in by_key {
        match sides.as_slice() {
            [_] => {}
            [(a, fa), (b, fb)] => {
                adj[*a][fa.index()] = Some(link(cell_vertices, *a, *fa, *b, *fb));
                adj[*b][fb.index()] = Some(link(cell_vertices, *b, *fb, *a, *fa));
            }
            _ => return Err(MeshError::NonManifold { vertices: key }),
        }
    }
    Ok(adj)
}

fn link(cv: &[[usize; 4]], a: usize, fa: FacetId, b: usize, fb: FacetId) -> Neighbor {
    let mut corner_map = [0u8; 4];
    for v in 0..4 {
        corner_map[v] = if v == fa.index() {
            fb.index() as u8
        } else {
            cv[b]
                .iter()
                .position(|&g| g == cv[a][v])
                .expect("facet corners shared") as u8
        };
    }
    Neighbor {
        cell: CellId::new(b),
        facet: fb,
        corner_map,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_tet_all_boundary() {
        let adj = build_adjacency(&[[0, 1, 2, 3]]).unwrap();
        assert!(adj[0].iter().all(Option::is_none));
    }

    #[test]
    fn two_tets_share_one_face() {
        let adj = build_adjacency(&[[0, 1, 2, 3], [4, 3, 2, 1]]).unwrap();
        let interior: usize = adj.iter().flatten().filter(|n| n.is_some()).count();
        assert_eq!(interior, 2);
        let boundary: usize = adj.iter().flatten().filter(|n| n.is_none()).count();
        assert_eq!(boundary, 6);
        let n = adj[0][0].unwrap();
        assert_eq!(n.cell.index(), 1);
        assert_eq!(n.facet.index(), 0);
        // vertex 1 of cell 0 is global 1, which is local 3 of cell 1
        assert_eq!(n.corner_map, [0, 3, 2, 1]);
    }

    #[test]
    fn non_manifold_rejected() {
        let err = build_adjacency(&[[0, 1, 2, 3], [4, 1, 2, 3], [5, 1, 2, 3]]).unwrap_err();
        assert!(matches!(err, MeshError::NonManifold { .. }));
    }
}
