use crate::field::{FemField, FieldError, ValueShape};
use crate::linalg::{self, Vec3};
use crate::position::MeshPos;
use crate::scalar::Real;

use super::eigen::{eig_sym3, Eigen3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FeatureKind<T> {
    Isosurface {
        iso: T,
    },
    /// Height ridge: strength is `−λ₁`. `bias` is the smallest eigenvalue gap
    /// `λ₂ − λ₁` at which the ridge direction is trusted.
    RidgeSurface {
        strength_threshold: T,
        bias: T,
    },
}

/// Implicit feature of a scalar field, defined by its strength, a Newton-like
/// step onto the feature set, and the tangent projection.
#[derive(Clone, Copy, Debug)]
pub struct Feature<'a, T> {
    pub kind: FeatureKind<T>,
    pub field: &'a FemField<T>,
    /// Maximum length of a feature step.
    pub step_limit: T,
}

/// Everything the particle update needs at one position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Local<T> {
    pub value: T,
    pub grad: Vec3<T>,
    pub strength: T,
    pub step: Vec3<T>,
    /// Unit normal of the feature's tangent plane; `None` when degenerate.
    pub normal: Option<Vec3<T>>,
    pub eigen: Option<Eigen3<T>>,
}

impl<T: Real> Local<T> {
    pub fn perp(&self, u: Vec3<T>) -> Vec3<T> {
        match self.normal {
            Some(n) => linalg::axpy(u, -linalg::dot(n, u), n),
            None => u,
        }
    }
}

impl<'a, T: Real> Feature<'a, T> {
    pub fn new(kind: FeatureKind<T>, field: &'a FemField<T>) -> Result<Self, FieldError> {
        if field.shape() != ValueShape::Scalar {
            return Err(FieldError::WrongShape {
                expected: ValueShape::Scalar,
                got: field.shape(),
            });
        }
        Ok(Self {
            kind,
            field,
            step_limit: T::infinity(),
        })
    }

    /// `None` for an invalid position or a degenerate cell map.
    pub fn local(&self, p: &MeshPos<T>) -> Option<Local<T>> {
        if !p.is_valid() {
            return None;
        }
        let tiny = T::lit(1e-12);
        let mut out = match self.kind {
            FeatureKind::Isosurface { iso } => {
                let (value, grad) = self.field.scalar_grad(p.cell(), p.xi()).ok()?;
                let g2 = linalg::dot(grad, grad);
                let gn = g2.sqrt();
                let (step, normal) = if gn < tiny {
                    (linalg::zero3(), None)
                } else {
                    (linalg::scale(grad, -(value - iso) / g2), Some(linalg::scale(grad, gn.recip())))
                };
                Local {
                    value,
                    grad,
                    strength: gn,
                    step,
                    normal,
                    eigen: None,
                }
            }
            FeatureKind::RidgeSurface { bias, .. } => {
                let (value, grad, hess) = self.field.scalar_derivs(p.cell(), p.xi()).ok()?;
                let eig = eig_sym3(&hess);
                let (l1, e1) = (eig.values[0], eig.vectors[0]);
                let trusted = eig.values[1] - l1 >= bias;
                let step = if trusted && l1.abs() >= tiny {
                    linalg::scale(e1, -linalg::dot(grad, e1) / l1)
                } else {
                    linalg::zero3()
                };
                Local {
                    value,
                    grad,
                    strength: -l1,
                    step,
                    normal: trusted.then_some(e1),
                    eigen: Some(eig),
                }
            }
        };
        let len = linalg::norm(out.step);
        if len > self.step_limit {
            out.step = linalg::scale(out.step, self.step_limit / len);
        }
        Some(out)
    }

    /// `|∇F|` for isosurfaces, `−λ₁` for ridges; zero when invalid.
    pub fn strength(&self, p: &MeshPos<T>) -> T {
        self.local(p).map_or(T::zero(), |l| l.strength)
    }

    pub fn step(&self, p: &MeshPos<T>) -> Vec3<T> {
        self.local(p).map_or(linalg::zero3(), |l| l.step)
    }

    /// Projection of `u` onto the feature tangent plane.
    pub fn perp(&self, p: &MeshPos<T>, u: Vec3<T>) -> Vec3<T> {
        self.local(p).map_or(u, |l| l.perp(u))
    }

    /// `|F − iso|`, or `|∇F·e₁| / (|∇F| + 1e-12)` for ridges.
    pub fn residual(&self, l: &Local<T>) -> T {
        match self.kind {
            FeatureKind::Isosurface { iso } => (l.value - iso).abs(),
            FeatureKind::RidgeSurface { .. } => {
                let e1 = l.eigen.map_or(linalg::zero3(), |e| e.vectors[0]);
                linalg::dot(l.grad, e1).abs() / (linalg::norm(l.grad) + T::lit(1e-12))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;
    use crate::position::pos_from_world;
    use crate::synth::{make_mesh, Shape, SynthSpec};
    use std::sync::Arc;

    fn field(d: usize, f: impl Fn([f64; 3]) -> f64) -> FemField<f64> {
        let m: Mesh<f64> = make_mesh(&SynthSpec {
            shape: Shape::Box {
                min: [-1.0; 3],
                max: [1.0; 3],
                divisions: [2; 3],
            },
            geom_degree: 1,
        })
        .unwrap();
        FemField::interpolate(Arc::new(m), d, ValueShape::Scalar, |x, o| o[0] = f(x)).unwrap()
    }

    const ISO0: FeatureKind<f64> = FeatureKind::Isosurface { iso: 0.0 };
    const RIDGE: FeatureKind<f64> = FeatureKind::RidgeSurface {
        strength_threshold: 1.0,
        bias: 0.1,
    };

    #[test]
    fn iso_on_linear_field() {
        let f = field(1, |x| x[0]);
        let feat = Feature::new(ISO0, &f).unwrap();
        let p = pos_from_world(f.mesh(), [0.3, 0.2, -0.1]);
        assert!((feat.strength(&p) - 1.0).abs() < 1e-12);
        let s = feat.step(&p);
        assert!(linalg::dist(s, [-0.3, 0.0, 0.0]) < 1e-12);
        let on = pos_from_world(f.mesh(), [0.0, 0.2, -0.1]);
        assert!(linalg::norm(feat.step(&on)) < 1e-12);
        let n = [1.0, 0.0, 0.0];
        assert!(linalg::norm(feat.perp(&p, [2.0, 0.0, 0.0])) < 1e-12);
        assert!(linalg::dist(feat.perp(&p, [0.0, 1.0, 2.0]), [0.0, 1.0, 2.0]) < 1e-12);
        let u = [0.3, -0.7, 0.2];
        assert!(linalg::norm(feat.perp(&p, u)) <= linalg::norm(u));
        assert!(linalg::dot(feat.perp(&p, u), n).abs() < 1e-12);
        assert_eq!(feat.strength(&crate::position::MeshPos::invalid()), 0.0);
    }

    #[test]
    fn ridge_strength_from_hessian() {
        let bowl = field(2, |x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        let p = pos_from_world(bowl.mesh(), [0.2, 0.1, 0.3]);
        assert!((Feature::new(RIDGE, &bowl).unwrap().strength(&p) + 2.0).abs() < 1e-9);
        let cap = field(2, |x| -(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
        assert!((Feature::new(RIDGE, &cap).unwrap().strength(&p) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn ridge_step_lands_on_ridge_line() {
        let f = field(2, |x| -x[0] * x[0] + x[1]);
        let feat = Feature::new(RIDGE, &f).unwrap();
        let p = pos_from_world(f.mesh(), [0.1, 0.3, 0.2]);
        let l = feat.local(&p).unwrap();
        assert!((l.strength - 2.0).abs() < 1e-9);
        assert!(linalg::dist(l.step, [-0.1, 0.0, 0.0]) < 1e-9);
        assert!(linalg::dist(l.normal.unwrap(), [1.0, 0.0, 0.0]) < 1e-9);
    }

    #[test]
    fn ridge_gap_guard() {
        // λ₁ = λ₂: the ridge direction is ambiguous
        let f = field(2, |x| -x[0] * x[0] - x[1] * x[1]);
        let feat = Feature::new(RIDGE, &f).unwrap();
        let p = pos_from_world(f.mesh(), [0.1, 0.3, 0.2]);
        let l = feat.local(&p).unwrap();
        assert_eq!(l.step, [0.0; 3]);
        assert!(l.normal.is_none());
    }

    #[test]
    fn step_limit_clamps() {
        let f = field(1, |x| 3.0 * x[0]);
        let mut feat = Feature::new(FeatureKind::Isosurface { iso: -2.0 }, &f).unwrap();
        feat.step_limit = 0.25;
        let p = pos_from_world(f.mesh(), [0.5, 0.0, 0.0]);
        assert!((linalg::norm(feat.step(&p)) - 0.25).abs() < 1e-12);
    }
}
