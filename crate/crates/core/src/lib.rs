//! Point location, point movement and feature sampling on curved,
//! higher-order tetrahedral finite element meshes.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the aliases below fix it to `f64`.

pub mod basis;
pub mod bench;
pub mod field;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod particles;
pub mod position;
pub mod refcell;
pub mod scalar;
pub mod synth;
pub mod trace;

pub use scalar::Real;

pub type Mesh = mesh::Mesh<f64>;
pub type FemField = field::FemField<f64>;
pub type MeshPos = position::MeshPos<f64>;
pub type RefPoint = refcell::RefPoint<f64>;
pub type Scheme = position::Scheme<f64>;

pub type Mesh32 = mesh::Mesh<f32>;
pub type FemField32 = field::FemField<f32>;
pub type MeshPos32 = position::MeshPos<f32>;
