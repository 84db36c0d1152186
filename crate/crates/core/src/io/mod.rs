//! Mesh and field JSON documents, CSV tables and legacy VTK output.

mod json;
mod text;

use std::path::{Path, PathBuf};

pub use json::{
    field_from_json, field_to_json, mesh_from_json, mesh_to_json, read_field_json, read_mesh_json,
    write_field_json, write_mesh_json, FORMAT_VERSION,
};
pub use text::{
    particles_csv, particles_vtk, trace_csv, trace_vtk, write_particles_csv, write_particles_vtk,
    write_trace_csv, write_trace_vtk,
};

use crate::field::FieldError;
use crate::mesh::MeshError;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("unsupported format_version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}
