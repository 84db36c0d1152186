//! RK2 (midpoint) streamlines through a vector field, moving positions with
//! any of the update schemes.

use crate::field::{FemField, FieldError, ValueShape};
use crate::linalg::{self, Vec3};
use crate::position::{pos_from_world, MoveOptions, Scheme};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceConfig<T> {
    pub h: T,
    pub n_steps: usize,
    pub scheme: Scheme<T>,
    pub opts: MoveOptions<T>,
}

impl<T: Real> TraceConfig<T> {
    pub fn new(h: T, n_steps: usize, scheme: Scheme<T>) -> Self {
        Self {
            h,
            n_steps,
            scheme,
            opts: MoveOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceStatus {
    Completed,
    /// The step with this index would have left the mesh.
    LeftDomain(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceResult<T> {
    /// Seed followed by one world point per completed step.
    pub points: Vec<Vec3<T>>,
    pub status: TraceStatus,
    pub steps_inside: usize,
}

/// Midpoint rule: `p ← p ⊕ h·u(p ⊕ (h/2)·u(p))`. Tracing stops at the last
/// point from which a full step stayed inside.
pub fn rk2_trace<T: Real>(field: &FemField<T>, seed: Vec3<T>, cfg: &TraceConfig<T>) -> Result<TraceResult<T>, FieldError> {
    if field.shape() != ValueShape::Vector3 {
        return Err(FieldError::WrongShape {
            expected: ValueShape::Vector3,
            got: field.shape(),
        });
    }
    let mesh = field.mesh().as_ref();
    let mut pos = pos_from_world(mesh, seed);
    if !pos.is_valid() {
        return Ok(TraceResult {
            points: Vec::new(),
            status: TraceStatus::LeftDomain(0),
            steps_inside: 0,
        });
    }
    let half = cfg.h * T::lit(0.5);
    let mut points = Vec::with_capacity(cfg.n_steps + 1);
    points.push(pos.world());
    let mut status = TraceStatus::Completed;
    for step in 0..cfg.n_steps {
        let k1 = field.vector_ref(pos.cell(), pos.xi());
        let mid = cfg.scheme.apply(mesh, &pos, linalg::scale(k1, half), &cfg.opts);
        if !mid.is_valid() {
            status = TraceStatus::LeftDomain(step);
            break;
        }
        let k2 = field.vector_ref(mid.cell(), mid.xi());
        let next = cfg.scheme.apply(mesh, &pos, linalg::scale(k2, cfg.h), &cfg.opts);
        if !next.is_valid() {
            status = TraceStatus::LeftDomain(step);
            break;
        }
        pos = next;
        points.push(pos.world());
    }
    Ok(TraceResult {
        steps_inside: points.len() - 1,
        points,
        status,
    })
}
