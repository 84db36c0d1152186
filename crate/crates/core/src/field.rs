//! Finite element fields stored per cell over a Lagrange space, evaluated in
//! reference space and pushed to world space through each cell's geometric
//! map.
//!
//! World derivatives follow from differentiating `f(ξ) = u(T(ξ))`:
//!
//! ```text
//! ∇u = J⁻ᵀ ∇_ξ f
//! Hu = J⁻ᵀ (H_ξ f − Σ_k (∇u)_k H_ξ T_k) J⁻¹
//! ```

use std::fmt;
use std::sync::Arc;

use crate::basis::{BasisError, LagrangeBasis};
use crate::linalg::{self, Mat3, Vec3};
use crate::mesh::{CellId, Mesh};
use crate::refcell::{FacetId, RefPoint};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueShape {
    Scalar,
    Vector3,
}

impl ValueShape {
    pub fn components(self) -> usize {
        match self {
            ValueShape::Scalar => 1,
            ValueShape::Vector3 => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ValueShape::Scalar => "scalar",
            ValueShape::Vector3 => "vector3",
        }
    }
}

impl fmt::Display for ValueShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FieldValue<T> {
    Scalar(T),
    Vector(Vec3<T>),
}

/// World gradient of a scalar field, or world Jacobian (row per component)
/// of a vector field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FieldGrad<T> {
    Scalar(Vec3<T>),
    Vector(Mat3<T>),
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FieldError {
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("expected {expected} coefficients for this mesh, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("point is outside the mesh")]
    OutsideDomain,
    #[error("geometric map has a degenerate Jacobian")]
    DegenerateJacobian,
    #[error("operation needs a {expected} field, this one is {got}")]
    WrongShape { expected: ValueShape, got: ValueShape },
}

/// Per-cell coefficient field `f_i(ξ) = Σ_j c_j p_j(ξ)`.
#[derive(Clone, Debug)]
pub struct FemField<T> {
    mesh: Arc<Mesh<T>>,
    basis: LagrangeBasis<T>,
    shape: ValueShape,
    coeffs: Vec<T>,
    poly: Vec<T>,
    interface_gap: T,
}

fn min_det<T: Real>() -> T {
    T::lit(1e-14).max(T::min_positive_value())
}

impl<T: Real> FemField<T> {
    /// `coeffs` is cell-major, node-major, component-minor.
    pub fn new(mesh: Arc<Mesh<T>>, degree: usize, shape: ValueShape, coeffs: Vec<T>) -> Result<Self, FieldError> {
        let basis = LagrangeBasis::new(degree)?;
        let nc = shape.components();
        let per_cell = basis.node_count() * nc;
        let expected = mesh.num_cells() * per_cell;
        if coeffs.len() != expected {
            return Err(FieldError::LengthMismatch {
                expected,
                got: coeffs.len(),
            });
        }
        let poly = coeffs
            .chunks_exact(per_cell)
            .flat_map(|c| basis.nodal_to_monomial(c, nc))
            .collect();
        let mut field = Self {
            mesh,
            basis,
            shape,
            coeffs,
            poly,
            interface_gap: T::zero(),
        };
        field.interface_gap = field.max_interface_gap();
        let tol = T::lit(1e-9).max(T::epsilon() * T::lit(1e4));
        if field.interface_gap > tol {
            log::warn!(
                "field coefficients disagree across cell interfaces by up to {}",
                field.interface_gap
            );
        }
        Ok(field)
    }

    /// Nodal interpolation: `c_j = u(T_i(node_j))`.
    pub fn interpolate(
        mesh: Arc<Mesh<T>>,
        degree: usize,
        shape: ValueShape,
        analytic: impl Fn(Vec3<T>, &mut [T]),
    ) -> Result<Self, FieldError> {
        let basis = LagrangeBasis::<T>::new(degree)?;
        let nc = shape.components();
        let mut coeffs = vec![T::zero(); mesh.num_cells() * basis.node_count() * nc];
        let mut k = 0;
        for c in 0..mesh.num_cells() {
            for node in basis.nodes() {
                let x = mesh.geom_map(CellId::new(c), node);
                analytic(x, &mut coeffs[k..k + nc]);
                k += nc;
            }
        }
        Self::new(mesh, degree, shape, coeffs)
    }

    pub fn mesh(&self) -> &Arc<Mesh<T>> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn shape(&self) -> ValueShape {
        self.shape
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Largest disagreement of coefficients at shared interface nodes.
    pub fn interface_gap(&self) -> T {
        self.interface_gap
    }

    fn cell_poly(&self, cell: CellId) -> &[T] {
        let n = self.basis.node_count() * self.shape.components();
        &self.poly[cell.index() * n..(cell.index() + 1) * n]
    }

    fn max_interface_gap(&self) -> T {
        let mesh = &self.mesh;
        let d = self.basis.degree();
        let nc = self.shape.components();
        let npc = self.basis.node_count();
        let index_of = |xi: &RefPoint<T>| -> Option<usize> {
            let e = xi.xi.map(|v| (v * T::lit(d as f64)).round().to_f64_lossy() as i64);
            self.basis.monomials().exponents().iter().position(|x| {
                x[0] as i64 == e[0] && x[1] as i64 == e[1] && x[2] as i64 == e[2]
            })
        };
        let mut gap = T::zero();
        for c in 0..mesh.num_cells() {
            let cell = CellId::new(c);
            for f in FacetId::ALL {
                let Some(nb) = mesh.neighbor(cell, f) else { continue };
                if nb.cell.index() < c {
                    continue;
                }
                for (k, xi) in self.basis.nodes().iter().enumerate() {
                    if xi.barycentric()[f.index()].abs() > T::lit(1e-12) {
                        continue;
                    }
                    let (other, oxi) = mesh.transfer(cell, f, xi).expect("interior facet");
                    let Some(ok) = index_of(&oxi) else { continue };
                    for comp in 0..nc {
                        let a = self.coeffs[(c * npc + k) * nc + comp];
                        let b = self.coeffs[(other.index() * npc + ok) * nc + comp];
                        gap = gap.max((a - b).abs());
                    }
                }
            }
        }
        gap
    }

    fn expect_shape(&self, expected: ValueShape) -> Result<(), FieldError> {
        if self.shape == expected {
            Ok(())
        } else {
            Err(FieldError::WrongShape {
                expected,
                got: self.shape,
            })
        }
    }

    /// `f_i(ξ)`
    pub fn eval_ref(&self, cell: CellId, xi: &RefPoint<T>) -> FieldValue<T> {
        match self.shape {
            ValueShape::Scalar => FieldValue::Scalar(self.scalar_ref(cell, xi)),
            ValueShape::Vector3 => FieldValue::Vector(self.vector_ref(cell, xi)),
        }
    }

    /// Scalar value at a reference point. Panics on vector fields.
    #[inline]
    pub fn scalar_ref(&self, cell: CellId, xi: &RefPoint<T>) -> T {
        assert_eq!(self.shape, ValueShape::Scalar);
        self.basis.monomials().eval_poly::<T, 1>(self.cell_poly(cell), &xi.xi)[0]
    }

    /// Vector value at a reference point. Panics on scalar fields.
    #[inline]
    pub fn vector_ref(&self, cell: CellId, xi: &RefPoint<T>) -> Vec3<T> {
        assert_eq!(self.shape, ValueShape::Vector3);
        self.basis.monomials().eval_poly::<T, 3>(self.cell_poly(cell), &xi.xi)
    }

    /// Locates `x` and evaluates there.
    pub fn eval_world(&self, x: Vec3<T>) -> Result<FieldValue<T>, FieldError> {
        let (cell, xi) = self.mesh.locate(x, T::inside_tol()).ok_or(FieldError::OutsideDomain)?;
        Ok(self.eval_ref(cell, &xi))
    }

    pub fn grad_world(&self, cell: CellId, xi: &RefPoint<T>) -> Result<FieldGrad<T>, FieldError> {
        let jac = self.mesh.geom_jacobian(cell, xi);
        let inv = linalg::inverse(&jac, min_det()).ok_or(FieldError::DegenerateJacobian)?;
        let m = self.basis.monomials();
        Ok(match self.shape {
            ValueShape::Scalar => {
                let (_, g) = m.eval_poly_grad::<T, 1>(self.cell_poly(cell), &xi.xi);
                FieldGrad::Scalar(linalg::mat_t_vec(&inv, g[0]))
            }
            ValueShape::Vector3 => {
                let (_, g) = m.eval_poly_grad::<T, 3>(self.cell_poly(cell), &xi.xi);
                FieldGrad::Vector(g.map(|row| linalg::mat_t_vec(&inv, row)))
            }
        })
    }

    /// Scalar value and world gradient.
    pub fn scalar_grad(&self, cell: CellId, xi: &RefPoint<T>) -> Result<(T, Vec3<T>), FieldError> {
        self.expect_shape(ValueShape::Scalar)?;
        let jac = self.mesh.geom_jacobian(cell, xi);
        let inv = linalg::inverse(&jac, min_det()).ok_or(FieldError::DegenerateJacobian)?;
        let (v, g) = self
            .basis
            .monomials()
            .eval_poly_grad::<T, 1>(self.cell_poly(cell), &xi.xi);
        Ok((v[0], linalg::mat_t_vec(&inv, g[0])))
    }

    /// Scalar value, world gradient and (exactly symmetric) world Hessian.
    pub fn scalar_derivs(&self, cell: CellId, xi: &RefPoint<T>) -> Result<(T, Vec3<T>, Mat3<T>), FieldError> {
        self.expect_shape(ValueShape::Scalar)?;
        let (_, jac, map_hess) = self.mesh.geom_second_order(cell, xi);
        let inv = linalg::inverse(&jac, min_det()).ok_or(FieldError::DegenerateJacobian)?;
        let (v, g, h) = self
            .basis
            .monomials()
            .eval_poly_hess::<T, 1>(self.cell_poly(cell), &xi.xi);
        let grad = linalg::mat_t_vec(&inv, g[0]);
        let mut inner = h[0];
        for (k, hk) in map_hess.iter().enumerate() {
            for i in 0..3 {
                for j in 0..3 {
                    inner[i][j] -= grad[k] * hk[i][j];
                }
            }
        }
        let hw = linalg::mat_mul(&linalg::transpose(&inv), &linalg::mat_mul(&inner, &inv));
        Ok((v[0], grad, linalg::symmetrize(&hw)))
    }

    /// World Hessian of a scalar field.
    pub fn hess_world(&self, cell: CellId, xi: &RefPoint<T>) -> Result<Mat3<T>, FieldError> {
        self.scalar_derivs(cell, xi).map(|(_, _, h)| h)
    }
}
