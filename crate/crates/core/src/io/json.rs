use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{io_err, IoError};
use crate::field::{FemField, ValueShape};
use crate::mesh::{CellId, Mesh};
use crate::scalar::Real;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshDoc {
    format_version: u32,
    dim: u32,
    geom_degree: usize,
    vertices: Vec<f64>,
    geom_nodes: Vec<f64>,
    cells: Vec<Vec<usize>>,
    cell_vertices: Vec<[usize; 4]>,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum ShapeTag {
    Scalar,
    Vector3,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldDoc {
    format_version: u32,
    degree: usize,
    value_shape: ShapeTag,
    coeffs: Vec<f64>,
}

fn flatten<T: Real>(pts: &[[T; 3]]) -> Vec<f64> {
    pts.iter().flat_map(|p| p.map(|v| v.to_f64_lossy())).collect()
}

fn triples<T: Real>(name: &str, flat: &[f64]) -> Result<Vec<[T; 3]>, IoError> {
    if !flat.len().is_multiple_of(3) {
        return Err(IoError::Schema(format!("{name} length {} is not a multiple of 3", flat.len())));
    }
    Ok(flat.chunks_exact(3).map(|c| [T::lit(c[0]), T::lit(c[1]), T::lit(c[2])]).collect())
}

fn parse<D: for<'de> Deserialize<'de>>(text: &str, context: &str) -> Result<D, IoError> {
    serde_json::from_str(text).map_err(|source| IoError::Json {
        context: context.to_string(),
        source,
    })
}

pub fn mesh_to_json<T: Real>(mesh: &Mesh<T>) -> String {
    let doc = MeshDoc {
        format_version: FORMAT_VERSION,
        dim: 3,
        geom_degree: mesh.geom_degree(),
        vertices: flatten(mesh.vertices()),
        geom_nodes: flatten(mesh.geom_nodes()),
        cells: (0..mesh.num_cells())
            .map(|c| mesh.cell_nodes(CellId::new(c)).to_vec())
            .collect(),
        cell_vertices: mesh.cell_vertices().to_vec(),
    };
    serde_json::to_string(&doc).expect("mesh document serializes")
}

/// Parses and validates a mesh document.
pub fn mesh_from_json<T: Real>(text: &str) -> Result<Mesh<T>, IoError> {
    let doc: MeshDoc = parse(text, "mesh document")?;
    if doc.format_version != FORMAT_VERSION {
        return Err(IoError::Version(doc.format_version));
    }
    if doc.dim != 3 {
        return Err(IoError::Schema(format!("dim must be 3, got {}", doc.dim)));
    }
    let vertices = triples("vertices", &doc.vertices)?;
    let nodes = triples("geom_nodes", &doc.geom_nodes)?;
    Ok(Mesh::new(doc.geom_degree, vertices, nodes, doc.cells, doc.cell_vertices)?)
}

pub fn field_to_json<T: Real>(field: &FemField<T>) -> String {
    let doc = FieldDoc {
        format_version: FORMAT_VERSION,
        degree: field.degree(),
        value_shape: match field.shape() {
            ValueShape::Scalar => ShapeTag::Scalar,
            ValueShape::Vector3 => ShapeTag::Vector3,
        },
        coeffs: field.coeffs().iter().map(|c| c.to_f64_lossy()).collect(),
    };
    serde_json::to_string(&doc).expect("field document serializes")
}

/// Parses a field document over `mesh`; the coefficient count is checked
/// against the mesh.
pub fn field_from_json<T: Real>(text: &str, mesh: Arc<Mesh<T>>) -> Result<FemField<T>, IoError> {
    let doc: FieldDoc = parse(text, "field document")?;
    if doc.format_version != FORMAT_VERSION {
        return Err(IoError::Version(doc.format_version));
    }
    let shape = match doc.value_shape {
        ShapeTag::Scalar => ValueShape::Scalar,
        ShapeTag::Vector3 => ValueShape::Vector3,
    };
    let coeffs = doc.coeffs.into_iter().map(T::lit).collect();
    Ok(FemField::new(mesh, doc.degree, shape, coeffs)?)
}

pub fn read_mesh_json<T: Real>(path: &Path) -> Result<Mesh<T>, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    mesh_from_json(&text).map_err(|e| with_path(e, path))
}

pub fn write_mesh_json<T: Real>(mesh: &Mesh<T>, path: &Path) -> Result<(), IoError> {
    fs::write(path, mesh_to_json(mesh)).map_err(io_err(path))
}

pub fn read_field_json<T: Real>(path: &Path, mesh: Arc<Mesh<T>>) -> Result<FemField<T>, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    field_from_json(&text, mesh).map_err(|e| with_path(e, path))
}

pub fn write_field_json<T: Real>(field: &FemField<T>, path: &Path) -> Result<(), IoError> {
    fs::write(path, field_to_json(field)).map_err(io_err(path))
}

fn with_path(e: IoError, path: &Path) -> IoError {
    match e {
        IoError::Json { source, .. } => IoError::Json {
            context: path.display().to_string(),
            source,
        },
        other => other,
    }
}
