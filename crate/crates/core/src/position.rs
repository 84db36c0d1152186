//! Mesh positions and the three position-update schemes.
//!
//! A [`MeshPos`] is a `(cell, ξ)` pair with its world point cached. Moving it
//! by a world vector `v` can be done by
//!
//! - [`add_naive`]: locate `x + v` from scratch,
//! - [`add_guided`]: walk `ξ` through reference space along `DT⁻¹v`, hopping
//!   facets into neighbouring cells,
//! - [`add_guided_checked`]: the guided walk with a world-space error bound
//!   that falls back to Newton or to the naive scheme.

use std::fmt;
use std::str::FromStr;

use crate::linalg::{self, Vec3};
use crate::mesh::{CellId, Mesh, DEFAULT_NEWTON_ITERS};
use crate::refcell::{self, RefPoint};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshPos<T> {
    cell: CellId,
    xi: RefPoint<T>,
    world: Vec3<T>,
}

impl<T: Real> MeshPos<T> {
    pub fn invalid() -> Self {
        Self {
            cell: CellId::INVALID,
            xi: refcell::centroid(),
            world: linalg::zero3(),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.cell.is_valid()
    }

    pub fn cell(&self) -> CellId {
        self.cell
    }

    /// Reference point; meaningless on an invalid position.
    pub fn xi(&self) -> &RefPoint<T> {
        &self.xi
    }

    /// Cached world point; meaningless on an invalid position.
    pub fn world(&self) -> Vec3<T> {
        self.world
    }

    /// `Some(world)` when valid.
    pub fn try_world(&self) -> Option<Vec3<T>> {
        self.is_valid().then_some(self.world)
    }

    fn at(mesh: &Mesh<T>, cell: CellId, xi: RefPoint<T>) -> Self {
        Self {
            cell,
            xi,
            world: mesh.geom_map(cell, &xi),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoveOptions<T> {
    pub max_cells: usize,
    pub inside_tol: T,
    pub facet_nudge: T,
    pub err_max: T,
}

impl<T: Real> Default for MoveOptions<T> {
    fn default() -> Self {
        Self {
            max_cells: 64,
            inside_tol: T::lit(1e-9),
            facet_nudge: T::lit(1e-12),
            err_max: T::lit(1e-5),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scheme<T> {
    Naive,
    Guided,
    GuidedChecked(T),
}

impl<T: Real> Scheme<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Naive => "naive",
            Scheme::Guided => "guided",
            Scheme::GuidedChecked(_) => "checked",
        }
    }

    pub fn err_max(&self) -> Option<T> {
        match *self {
            Scheme::GuidedChecked(e) => Some(e),
            _ => None,
        }
    }

    /// Moves `pos` by `v` with this scheme. The error bound of
    /// `GuidedChecked` overrides `opts.err_max`.
    pub fn apply(&self, mesh: &Mesh<T>, pos: &MeshPos<T>, v: Vec3<T>, opts: &MoveOptions<T>) -> MeshPos<T> {
        match *self {
            Scheme::Naive => add_naive(mesh, pos, v),
            Scheme::Guided => add_guided(mesh, pos, v, opts),
            Scheme::GuidedChecked(e) => add_guided_checked(mesh, pos, v, &MoveOptions { err_max: e, ..*opts }),
        }
    }
}

impl<T: Real> fmt::Display for Scheme<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::GuidedChecked(e) => write!(f, "checked({e})"),
            s => f.write_str(s.name()),
        }
    }
}

/// Parses `naive`, `guided`, `checked` (default bound 1e-5) or `checked:<err>`.
impl<T: Real> FromStr for Scheme<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(Scheme::Naive),
            "guided" => Ok(Scheme::Guided),
            "checked" => Ok(Scheme::GuidedChecked(T::lit(1e-5))),
            _ => s
                .strip_prefix("checked:")
                .and_then(|e| e.parse::<f64>().ok())
                .filter(|e| *e >= 0.0)
                .map(|e| Scheme::GuidedChecked(T::lit(e)))
                .ok_or_else(|| format!("unknown scheme `{s}` (expected naive, guided or checked)")),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PositionError {
    #[error("cell id is invalid or out of range")]
    BadCell,
    #[error("reference point lies outside the reference cell")]
    OutsideCell,
}

/// Locates `x`; invalid when it is outside the mesh.
pub fn pos_from_world<T: Real>(mesh: &Mesh<T>, x: Vec3<T>) -> MeshPos<T> {
    match mesh.locate(x, T::inside_tol()) {
        Some((cell, xi)) => MeshPos::at(mesh, cell, xi),
        None => MeshPos::invalid(),
    }
}

pub fn pos_from_ref<T: Real>(mesh: &Mesh<T>, cell: CellId, xi: RefPoint<T>) -> Result<MeshPos<T>, PositionError> {
    if cell.get().is_none_or(|c| c >= mesh.num_cells()) {
        return Err(PositionError::BadCell);
    }
    if !refcell::inside(&xi, T::lit(1e-6)) {
        return Err(PositionError::OutsideCell);
    }
    Ok(MeshPos::at(mesh, cell, xi))
}

pub fn add_naive<T: Real>(mesh: &Mesh<T>, pos: &MeshPos<T>, v: Vec3<T>) -> MeshPos<T> {
    if !pos.is_valid() {
        return *pos;
    }
    pos_from_world(mesh, linalg::add(pos.world, v))
}

pub fn add_guided<T: Real>(mesh: &Mesh<T>, pos: &MeshPos<T>, v: Vec3<T>, opts: &MoveOptions<T>) -> MeshPos<T> {
    guided(mesh, pos, v, opts, None)
}

pub fn add_guided_checked<T: Real>(mesh: &Mesh<T>, pos: &MeshPos<T>, v: Vec3<T>, opts: &MoveOptions<T>) -> MeshPos<T> {
    guided(mesh, pos, v, opts, Some(opts.err_max))
}

/// `world(a) − world(b)`, or zero unless both are valid.
pub fn pos_sub<T: Real>(a: &MeshPos<T>, b: &MeshPos<T>) -> Vec3<T> {
    if a.is_valid() && b.is_valid() {
        linalg::sub(a.world, b.world)
    } else {
        linalg::zero3()
    }
}

fn nudge<T: Real>(xi: &RefPoint<T>, nu: T) -> RefPoint<T> {
    let quarter = nu * T::lit(0.25);
    RefPoint::from_barycentric(xi.barycentric().map(|b| (T::one() - nu) * b + quarter))
}

fn guided<T: Real>(
    mesh: &Mesh<T>,
    pos: &MeshPos<T>,
    v: Vec3<T>,
    opts: &MoveOptions<T>,
    err_max: Option<T>,
) -> MeshPos<T> {
    if !pos.is_valid() {
        return *pos;
    }
    let x0 = pos.world;
    let target = linalg::add(x0, v);
    let min_det = T::lit(1e-14).max(T::min_positive_value());
    let mut cell = pos.cell;
    let mut xi = pos.xi;
    let mut t = T::zero();

    // Interior finish at `cand`, with the optional error check.
    let finish = |cell: CellId, cand: RefPoint<T>| -> MeshPos<T> {
        let cand = refcell::clamp_to_cell(&cand);
        let out = MeshPos::at(mesh, cell, cand);
        let Some(e) = err_max else { return out };
        if linalg::dist(out.world, target) <= e {
            return out;
        }
        let tol = T::newton_tol() * (T::one() + linalg::norm(target));
        match mesh.newton_invert_from(cell, target, cand, tol, DEFAULT_NEWTON_ITERS) {
            Ok((p, _)) if refcell::inside(&p, opts.inside_tol) => MeshPos::at(mesh, cell, p),
            _ => pos_from_world(mesh, target),
        }
    };

    for _ in 0..opts.max_cells {
        let jac = mesh.geom_jacobian(cell, &xi);
        let Some(inv) = linalg::inverse(&jac, min_det) else {
            break;
        };
        let ref_vel = linalg::mat_vec(&inv, v);
        let remaining = T::one() - t;
        let cand = xi.offset(ref_vel, remaining);
        if refcell::inside(&cand, opts.inside_tol) {
            return finish(cell, cand);
        }
        let Some(exit) = refcell::exit_time(&xi, ref_vel) else {
            return MeshPos::at(mesh, cell, xi);
        };
        if t + exit.t >= T::one() {
            return finish(cell, cand);
        }
        t += exit.t;
        let on_facet = xi.offset(ref_vel, exit.t);
        if let Some(e) = err_max {
            let w = mesh.geom_map(cell, &on_facet);
            if linalg::dist(w, linalg::axpy(x0, t, v)) > e {
                return pos_from_world(mesh, target);
            }
        }
        match mesh.transfer(cell, exit.facet, &on_facet) {
            Some((next, p)) => {
                cell = next;
                xi = nudge(&p, opts.facet_nudge);
            }
            None => return MeshPos::invalid(),
        }
    }
    add_naive(mesh, pos, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::tests::single_cell;
    use crate::synth::{make_mesh, Shape, SynthSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn box_mesh() -> Mesh<f64> {
        make_mesh(&SynthSpec {
            shape: Shape::Box {
                min: [0.0; 3],
                max: [2.0, 1.0, 1.0],
                divisions: [4, 2, 2],
            },
            geom_degree: 1,
        })
        .unwrap()
    }

    fn cylinder() -> Mesh<f64> {
        make_mesh(&SynthSpec {
            shape: Shape::CylinderShell {
                r_in: 1.0,
                r_out: 2.0,
                height: 2.0,
                divisions: [2, 12, 4],
            },
            geom_degree: 3,
        })
        .unwrap()
    }

    fn curved(p: [f64; 3]) -> [f64; 3] {
        [
            p[0] + 0.1 * p[1] * p[1],
            p[1] + 0.05 * p[0] * p[2],
            p[2] + 0.1 * p[0] * p[0] * p[1] - 0.05 * p[1],
        ]
    }

    fn opts() -> MoveOptions<f64> {
        MoveOptions::default()
    }

    #[test]
    fn from_world_and_ref() {
        let m = box_mesh();
        let p = pos_from_world(&m, [0.3, 0.4, 0.7]);
        assert!(p.is_valid());
        assert!(linalg::dist(p.world(), [0.3, 0.4, 0.7]) < 1e-8);
        assert!(!pos_from_world(&m, [3.0, 0.4, 0.7]).is_valid());
        // a shared vertex goes to the lowest-index cell containing it
        let q = pos_from_world(&m, [0.5, 0.5, 0.5]);
        let lowest = (0..m.num_cells())
            .find(|&c| {
                m.newton_invert(CellId::new(c), [0.5; 3], 1e-12, 20)
                    .is_ok_and(|x| refcell::inside(&x, 1e-9))
            })
            .unwrap();
        assert_eq!(q.cell().index(), lowest);

        let c = pos_from_ref(&m, CellId::new(0), refcell::centroid()).unwrap();
        assert_eq!(c.world(), m.geom_map(CellId::new(0), &refcell::centroid()));
        assert_eq!(
            pos_from_ref(&m, CellId::new(0), RefPoint::new(2.0, 0.0, 0.0)),
            Err(PositionError::OutsideCell)
        );
        assert_eq!(pos_from_ref(&m, CellId::INVALID, refcell::centroid()), Err(PositionError::BadCell));
    }

    #[test]
    fn invalid_is_absorbing() {
        let m = box_mesh();
        let bad = MeshPos::invalid();
        for s in [Scheme::Naive, Scheme::Guided, Scheme::GuidedChecked(0.0)] {
            assert!(!s.apply(&m, &bad, [0.0; 3], &opts()).is_valid());
        }
    }

    #[test]
    fn zero_step_is_identity() {
        let m = cylinder();
        let p = pos_from_world(&m, [1.5, 0.1, 0.2]);
        let q = add_guided(&m, &p, [0.0; 3], &opts());
        assert_eq!(q.cell(), p.cell());
        assert!(linalg::dist(q.world(), p.world()) < 1e-14);
        let n = add_naive(&m, &p, [0.0; 3]);
        assert!(linalg::dist(n.world(), p.world()) < 1e-8);
    }

    #[test]
    fn guided_matches_naive_on_affine_mesh() {
        let m = box_mesh();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let diam = 0.5f64 * 3f64.sqrt();
        let mut both = 0;
        for _ in 0..1000 {
            let x = [rng.gen_range(0.0..2.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let p = pos_from_world(&m, x);
            let mut v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            v = linalg::scale(v, diam * rng.gen::<f64>() / linalg::norm(v));
            let g = add_guided(&m, &p, v, &opts());
            let n = add_naive(&m, &p, v);
            let y = linalg::add(x, v);
            let clearance = [y[0], 2.0 - y[0], y[1], 1.0 - y[1], y[2], 1.0 - y[2]]
                .into_iter()
                .fold(f64::INFINITY, f64::min)
                .abs();
            if clearance >= 1e-6 {
                assert_eq!(g.is_valid(), n.is_valid(), "{x:?} {v:?}");
            }
            if g.is_valid() && n.is_valid() {
                both += 1;
                assert!(linalg::dist(g.world(), n.world()) <= 1e-9);
            }
        }
        assert!(both > 300);
    }

    #[test]
    fn guided_is_first_order_on_curved_cell() {
        let m = single_cell(3, curved);
        let p = pos_from_ref(&m, CellId::new(0), refcell::centroid()).unwrap();
        let err = |s: f64| {
            let v = [0.04 * s, -0.03 * s, 0.05 * s];
            let g = add_guided(&m, &p, v, &opts());
            assert_eq!(g.cell(), p.cell());
            linalg::dist(g.world(), linalg::add(p.world(), v))
        };
        let (e1, e2, e3) = (err(1.0), err(0.5), err(0.25));
        assert!(e1 > 1e-8);
        assert!((3.0..5.0).contains(&(e1 / e2)), "{e1} {e2}");
        assert!((3.0..5.0).contains(&(e2 / e3)), "{e2} {e3}");
    }

    #[test]
    fn checked_limits() {
        let m = cylinder();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut n_checked = 0;
        for _ in 0..300 {
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let r: f64 = rng.gen_range(1.05..1.95);
            let x = [r * th.cos(), r * th.sin(), rng.gen_range(-0.9..0.9)];
            let p = pos_from_world(&m, x);
            assert!(p.is_valid());
            let v = [rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)];
            let g = add_guided(&m, &p, v, &opts());
            let inf = add_guided_checked(&m, &p, v, &MoveOptions { err_max: f64::INFINITY, ..opts() });
            assert_eq!(g, inf);
            let naive = add_naive(&m, &p, v);
            let zero = add_guided_checked(&m, &p, v, &MoveOptions { err_max: 0.0, ..opts() });
            if naive.is_valid() {
                assert!(zero.is_valid());
                assert!(linalg::dist(zero.world(), naive.world()) <= 1e-9);
            }
            let e = 1e-5;
            let c = add_guided_checked(&m, &p, v, &MoveOptions { err_max: e, ..opts() });
            if c.is_valid() {
                n_checked += 1;
                let target = linalg::add(p.world(), v);
                let close = linalg::dist(c.world(), target) <= e + 1e-9;
                assert!(close || c == naive);
            }
        }
        assert!(n_checked > 100);
    }

    #[test]
    fn guided_walks_many_cells() {
        let m = cylinder();
        let p = pos_from_world(&m, [1.5, 0.0, -0.9]);
        let v = [0.0, 0.0, 1.8];
        let g = add_guided(&m, &p, v, &opts());
        assert!(g.is_valid());
        assert!(linalg::dist(g.world(), [1.5, 0.0, 0.9]) < 1e-3);
        let out = add_guided(&m, &p, [0.0, 0.0, 3.0], &opts());
        assert!(!out.is_valid());
    }

    #[test]
    fn subtraction() {
        let m = box_mesh();
        let a = pos_from_world(&m, [0.2, 0.3, 0.4]);
        let b = pos_from_world(&m, [1.2, 0.5, 0.1]);
        assert_eq!(pos_sub(&a, &a), [0.0; 3]);
        let d = pos_sub(&a, &b);
        assert_eq!(d, linalg::neg(pos_sub(&b, &a)));
        assert!(linalg::dist(d, [-1.0, -0.2, 0.3]) < 1e-12);
        assert_eq!(pos_sub(&a, &MeshPos::invalid()), [0.0; 3]);
        assert_eq!(pos_sub(&MeshPos::invalid(), &a), [0.0; 3]);
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("naive".parse::<Scheme<f64>>(), Ok(Scheme::Naive));
        assert_eq!("checked:1e-6".parse::<Scheme<f64>>(), Ok(Scheme::GuidedChecked(1e-6)));
        assert!("fast".parse::<Scheme<f64>>().is_err());
    }
}
