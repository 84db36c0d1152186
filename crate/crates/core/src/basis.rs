//! Equispaced Lagrange bases of degree 1..=6 on the reference tetrahedron.
//!
//! Each basis function is stored as a combination of the monomials
//! `ξ₁^a ξ₂^b ξ₃^c` with `a + b + c ≤ d`, which makes values, gradients and
//! Hessians straightforward to evaluate. Nodes and monomials share one index
//! order: nested loops over `a` (outermost), `b`, then `c` (innermost). This
//! ordering is part of the JSON field format.

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use crate::linalg::{Mat3, Vec3};
use crate::refcell::RefPoint;
use crate::scalar::Real;

pub const MAX_DEGREE: usize = 6;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum BasisError {
    #[error("basis degree {0} is outside 1..=6")]
    BadDegree(usize),
}

/// `(d+1)(d+2)(d+3)/6`
pub const fn node_count(degree: usize) -> usize {
    (degree + 1) * (degree + 2) * (degree + 3) / 6
}

/// Exponent triples `(a, b, c)` with `a + b + c ≤ degree`, in node order.
pub fn exponents(degree: usize) -> Vec<[u8; 3]> {
    let mut out = Vec::with_capacity(node_count(degree));
    for a in 0..=degree {
        for b in 0..=(degree - a) {
            for c in 0..=(degree - a - b) {
                out.push([a as u8, b as u8, c as u8]);
            }
        }
    }
    out
}

/// Index of reference vertex `v` in the node ordering of the given degree.
pub fn vertex_node(degree: usize, v: usize) -> usize {
    let target: [usize; 3] = match v {
        0 => [0, 0, 0],
        1 => [degree, 0, 0],
        2 => [0, degree, 0],
        _ => [0, 0, degree],
    };
    exponents(degree)
        .iter()
        .position(|e| [e[0] as usize, e[1] as usize, e[2] as usize] == target)
        .expect("vertex node exists")
}

/// Powers `ξ_k^e` and their first and second derivatives, for `e ≤ degree`.
struct Powers<T> {
    p: [[T; MAX_DEGREE + 1]; 3],
    dp: [[T; MAX_DEGREE + 1]; 3],
    d2p: [[T; MAX_DEGREE + 1]; 3],
}

impl<T: Real> Powers<T> {
    fn new(xi: &Vec3<T>, degree: usize, order: usize) -> Self {
        let z = [T::zero(); MAX_DEGREE + 1];
        let mut s = Powers {
            p: [z; 3],
            dp: [z; 3],
            d2p: [z; 3],
        };
        for k in 0..3 {
            s.p[k][0] = T::one();
            for e in 1..=degree {
                s.p[k][e] = s.p[k][e - 1] * xi[k];
            }
            if order >= 1 {
                for e in 1..=degree {
                    s.dp[k][e] = T::lit(e as f64) * s.p[k][e - 1];
                }
            }
            if order >= 2 {
                for e in 2..=degree {
                    s.d2p[k][e] = T::lit((e * (e - 1)) as f64) * s.p[k][e - 2];
                }
            }
        }
        s
    }
}

/// Monomial set of one degree; evaluates polynomials given in monomial
/// coefficients.
#[derive(Clone, Debug)]
pub struct Monomials {
    degree: usize,
    exps: Vec<[u8; 3]>,
}

impl Monomials {
    pub fn new(degree: usize) -> Self {
        Self {
            degree,
            exps: exponents(degree),
        }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn exponents(&self) -> &[[u8; 3]] {
        &self.exps
    }

    pub fn values<T: Real>(&self, xi: &Vec3<T>, out: &mut [T]) {
        let pw = Powers::new(xi, self.degree, 0);
        for (o, e) in out.iter_mut().zip(&self.exps) {
            let [a, b, c] = [e[0] as usize, e[1] as usize, e[2] as usize];
            *o = pw.p[0][a] * pw.p[1][b] * pw.p[2][c];
        }
    }

    pub fn gradients<T: Real>(&self, xi: &Vec3<T>, out: &mut [Vec3<T>]) {
        let pw = Powers::new(xi, self.degree, 1);
        for (o, e) in out.iter_mut().zip(&self.exps) {
            let [a, b, c] = [e[0] as usize, e[1] as usize, e[2] as usize];
            *o = [
                pw.dp[0][a] * pw.p[1][b] * pw.p[2][c],
                pw.p[0][a] * pw.dp[1][b] * pw.p[2][c],
                pw.p[0][a] * pw.p[1][b] * pw.dp[2][c],
            ];
        }
    }

    pub fn hessians<T: Real>(&self, xi: &Vec3<T>, out: &mut [Mat3<T>]) {
        let pw = Powers::new(xi, self.degree, 2);
        for (o, e) in out.iter_mut().zip(&self.exps) {
            let [a, b, c] = [e[0] as usize, e[1] as usize, e[2] as usize];
            let xy = pw.dp[0][a] * pw.dp[1][b] * pw.p[2][c];
            let xz = pw.dp[0][a] * pw.p[1][b] * pw.dp[2][c];
            let yz = pw.p[0][a] * pw.dp[1][b] * pw.dp[2][c];
            *o = [
                [pw.d2p[0][a] * pw.p[1][b] * pw.p[2][c], xy, xz],
                [xy, pw.p[0][a] * pw.d2p[1][b] * pw.p[2][c], yz],
                [xz, yz, pw.p[0][a] * pw.p[1][b] * pw.d2p[2][c]],
            ];
        }
    }

    /// Value of `NC ≤ 3` polynomial components whose monomial coefficients
    /// are stored monomial-major (`coefs[m * NC + k]`).
    pub fn eval_poly<T: Real, const NC: usize>(&self, coefs: &[T], xi: &Vec3<T>) -> [T; NC] {
        let pw = Powers::new(xi, self.degree, 0);
        let mut v = [T::zero(); NC];
        for (m, e) in self.exps.iter().enumerate() {
            let mono = pw.p[0][e[0] as usize] * pw.p[1][e[1] as usize] * pw.p[2][e[2] as usize];
            let row = &coefs[m * NC..m * NC + NC];
            for k in 0..NC {
                v[k] += row[k] * mono;
            }
        }
        v
    }

    /// Values and reference gradients of `NC` polynomial components.
    pub fn eval_poly_grad<T: Real, const NC: usize>(
        &self,
        coefs: &[T],
        xi: &Vec3<T>,
    ) -> ([T; NC], [Vec3<T>; NC]) {
        let pw = Powers::new(xi, self.degree, 1);
        let mut v = [T::zero(); NC];
        let mut g = [[T::zero(); 3]; NC];
        for (m, e) in self.exps.iter().enumerate() {
            let [a, b, c] = [e[0] as usize, e[1] as usize, e[2] as usize];
            let pa = pw.p[0][a];
            let pb = pw.p[1][b];
            let pc = pw.p[2][c];
            let mono = pa * pb * pc;
            let gm = [pw.dp[0][a] * pb * pc, pa * pw.dp[1][b] * pc, pa * pb * pw.dp[2][c]];
            let row = &coefs[m * NC..m * NC + NC];
            for k in 0..NC {
                v[k] += row[k] * mono;
                g[k][0] += row[k] * gm[0];
                g[k][1] += row[k] * gm[1];
                g[k][2] += row[k] * gm[2];
            }
        }
        (v, g)
    }

    /// Values, gradients and Hessians of `NC` polynomial components.
    #[allow(clippy::type_complexity)]
    pub fn eval_poly_hess<T: Real, const NC: usize>(
        &self,
        coefs: &[T],
        xi: &Vec3<T>,
    ) -> ([T; NC], [Vec3<T>; NC], [Mat3<T>; NC]) {
        let pw = Powers::new(xi, self.degree, 2);
        let mut v = [T::zero(); NC];
        let mut g = [[T::zero(); 3]; NC];
        let mut h = [[[T::zero(); 3]; 3]; NC];
        for (m, e) in self.exps.iter().enumerate() {
            let [a, b, c] = [e[0] as usize, e[1] as usize, e[2] as usize];
            let (pa, pb, pc) = (pw.p[0][a], pw.p[1][b], pw.p[2][c]);
            let (da, db, dc) = (pw.dp[0][a], pw.dp[1][b], pw.dp[2][c]);
            let mono = pa * pb * pc;
            let gm = [da * pb * pc, pa * db * pc, pa * pb * dc];
            let hxx = pw.d2p[0][a] * pb * pc;
            let hyy = pa * pw.d2p[1][b] * pc;
            let hzz = pa * pb * pw.d2p[2][c];
            let hxy = da * db * pc;
            let hxz = da * pb * dc;
            let hyz = pa * db * dc;
            let row = &coefs[m * NC..m * NC + NC];
            for k in 0..NC {
                let r = row[k];
                v[k] += r * mono;
                for i in 0..3 {
                    g[k][i] += r * gm[i];
                }
                h[k][0][0] += r * hxx;
                h[k][1][1] += r * hyy;
                h[k][2][2] += r * hzz;
                h[k][0][1] += r * hxy;
                h[k][0][2] += r * hxz;
                h[k][1][2] += r * hyz;
            }
        }
        for hk in h.iter_mut() {
            hk[1][0] = hk[0][1];
            hk[2][0] = hk[0][2];
            hk[2][1] = hk[1][2];
        }
        (v, g, h)
    }
}

/// `node_count × node_count` row-major: row `j` holds basis `j` in monomials.
fn monomial_coeffs_f64(degree: usize) -> Arc<Vec<f64>> {
    static CACHE: [OnceLock<Arc<Vec<f64>>>; MAX_DEGREE] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    CACHE[degree - 1]
        .get_or_init(|| Arc::new(solve_vandermonde(degree)))
        .clone()
}

fn solve_vandermonde(degree: usize) -> Vec<f64> {
    let mono = Monomials::new(degree);
    let n = mono.len();
    let d = degree as f64;
    let mut vander = DMatrix::<f64>::zeros(n, n);
    let mut row = vec![0.0; n];
    for (k, e) in mono.exponents().iter().enumerate() {
        let node = [e[0] as f64 / d, e[1] as f64 / d, e[2] as f64 / d];
        mono.values(&node, &mut row);
        for m in 0..n {
            vander[(k, m)] = row[m];
        }
    }
    // V · Cᵀ = I, so Cᵀ = V⁻¹.
    let lu = vander.clone().lu();
    let mut inv = lu
        .try_inverse()
        .expect("equispaced Lagrange nodes are unisolvent");
    // One step of iterative refinement tightens the nodal property at d = 6.
    let resid = DMatrix::<f64>::identity(n, n) - &vander * &inv;
    inv += &inv * resid;
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        for m in 0..n {
            out[j * n + m] = inv[(m, j)];
        }
    }
    out
}

/// Lagrange basis `{p_j}` of one degree on the reference tetrahedron.
#[derive(Clone, Debug)]
pub struct LagrangeBasis<T> {
    degree: usize,
    mono: Monomials,
    nodes: Vec<RefPoint<T>>,
    coeffs: Vec<T>,
}

impl<T: Real> LagrangeBasis<T> {
    pub fn new(degree: usize) -> Result<Self, BasisError> {
        if !(1..=MAX_DEGREE).contains(&degree) {
            return Err(BasisError::BadDegree(degree));
        }
        let mono = Monomials::new(degree);
        let d = T::lit(degree as f64);
        let nodes = mono
            .exponents()
            .iter()
            .map(|e| {
                RefPoint::new(
                    T::lit(e[0] as f64) / d,
                    T::lit(e[1] as f64) / d,
                    T::lit(e[2] as f64) / d,
                )
            })
            .collect();
        let coeffs = monomial_coeffs_f64(degree).iter().map(|&c| T::lit(c)).collect();
        Ok(Self {
            degree,
            mono,
            nodes,
            coeffs,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[RefPoint<T>] {
        &self.nodes
    }

    pub fn monomials(&self) -> &Monomials {
        &self.mono
    }

    /// Row `j` holds the monomial coefficients of `p_j`.
    pub fn monomial_coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn eval(&self, xi: &RefPoint<T>) -> Vec<T> {
        let n = self.node_count();
        let mut m = vec![T::zero(); n];
        self.mono.values(&xi.xi, &mut m);
        self.coeffs
            .chunks_exact(n)
            .map(|row| row.iter().zip(&m).map(|(&c, &v)| c * v).sum())
            .collect()
    }

    pub fn eval_grad(&self, xi: &RefPoint<T>) -> Vec<Vec3<T>> {
        let n = self.node_count();
        let mut m = vec![[T::zero(); 3]; n];
        self.mono.gradients(&xi.xi, &mut m);
        self.coeffs
            .chunks_exact(n)
            .map(|row| {
                let mut g = [T::zero(); 3];
                for (&c, mg) in row.iter().zip(&m) {
                    for k in 0..3 {
                        g[k] += c * mg[k];
                    }
                }
                g
            })
            .collect()
    }

    pub fn eval_hess(&self, xi: &RefPoint<T>) -> Vec<Mat3<T>> {
        let n = self.node_count();
        let mut m = vec![[[T::zero(); 3]; 3]; n];
        self.mono.hessians(&xi.xi, &mut m);
        self.coeffs
            .chunks_exact(n)
            .map(|row| {
                let mut h = [[T::zero(); 3]; 3];
                for (&c, mh) in row.iter().zip(&m) {
                    for i in 0..3 {
                        for j in 0..3 {
                            h[i][j] += c * mh[i][j];
                        }
                    }
                }
                h
            })
            .collect()
    }

    /// Converts nodal values (`node_count × NC`, node-major) to monomial
    /// coefficients (`node_count × NC`, monomial-major).
    pub fn nodal_to_monomial(&self, nodal: &[T], nc: usize) -> Vec<T> {
        let n = self.node_count();
        let mut out = vec![T::zero(); n * nc];
        for j in 0..n {
            let row = &self.coeffs[j * n..(j + 1) * n];
            for k in 0..nc {
                let c = nodal[j * nc + k];
                if c == T::zero() {
                    continue;
                }
                for m in 0..n {
                    out[m * nc + k] += c * row[m];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_inside(rng: &mut impl Rng) -> RefPoint<f64> {
        loop {
            let p = RefPoint::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
            if crate::refcell::inside(&p, 0.0) {
                return p;
            }
        }
    }

    #[test]
    fn counts() {
        assert_eq!(LagrangeBasis::<f64>::new(1).unwrap().node_count(), 4);
        assert_eq!(LagrangeBasis::<f64>::new(2).unwrap().node_count(), 10);
        assert_eq!(LagrangeBasis::<f64>::new(6).unwrap().node_count(), 84);
        assert_eq!(LagrangeBasis::<f64>::new(0).unwrap_err(), BasisError::BadDegree(0));
        assert_eq!(LagrangeBasis::<f64>::new(7).unwrap_err(), BasisError::BadDegree(7));
    }

    #[test]
    fn degree_one_is_barycentric() {
        let b = LagrangeBasis::<f64>::new(1).unwrap();
        let xs: Vec<_> = b.nodes().iter().map(|n| n.xi).collect();
        assert_eq!(
            xs,
            vec![[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]
        );
        let p = RefPoint::new(0.1, 0.2, 0.3);
        let v = b.eval(&p);
        // node order (0,0,0),(0,0,1),(0,1,0),(1,0,0)
        let expect = [0.4, 0.3, 0.2, 0.1];
        for (a, e) in v.iter().zip(expect) {
            assert!((a - e).abs() < 1e-14);
        }
        let g = b.eval_grad(&p);
        assert_eq!(g[0], [-1.0, -1.0, -1.0]);
        assert_eq!(g[3], [1.0, 0.0, 0.0]);
        assert!(b.eval_hess(&p).iter().flatten().flatten().all(|&h| h == 0.0));
    }

    #[test]
    fn edge_midpoint_indicator() {
        let b = LagrangeBasis::<f64>::new(2).unwrap();
        let k = b
            .nodes()
            .iter()
            .position(|n| n.xi == [0.5, 0.5, 0.0])
            .unwrap();
        let v = b.eval(&b.nodes()[k]);
        for (j, x) in v.iter().enumerate() {
            let e = if j == k { 1.0 } else { 0.0 };
            assert!((x - e).abs() < 1e-12);
        }
    }

    #[test]
    fn nodal_delta_and_partition_of_unity_all_degrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in 1..=6 {
            let b = LagrangeBasis::<f64>::new(d).unwrap();
            for (k, node) in b.nodes().iter().enumerate() {
                let v = b.eval(node);
                for (j, x) in v.iter().enumerate() {
                    let e = if j == k { 1.0 } else { 0.0 };
                    assert!((x - e).abs() <= 1e-10, "d={d} j={j} k={k} {x}");
                }
            }
            for _ in 0..100 {
                let p = random_inside(&mut rng);
                let s: f64 = b.eval(&p).iter().sum();
                assert!((s - 1.0).abs() <= 1e-10);
                let gs = b.eval_grad(&p).iter().fold([0.0; 3], |a, g| crate::linalg::add(a, *g));
                assert!(gs.iter().all(|x| x.abs() <= 1e-8));
                let hs: f64 = b
                    .eval_hess(&p)
                    .iter()
                    .fold([[0.0; 3]; 3], |mut a, h| {
                        for i in 0..3 {
                            for j in 0..3 {
                                a[i][j] += h[i][j];
                            }
                        }
                        a
                    })
                    .iter()
                    .flatten()
                    .map(|x: &f64| x.abs())
                    .fold(0.0, f64::max);
                assert!(hs <= 1e-6, "d={d} hess sum {hs}");
            }
        }
    }

    fn close(a: f64, b: f64, rel: f64, abs_floor: f64) -> bool {
        if b.abs() < 1e-8 {
            (a - b).abs() <= abs_floor
        } else {
            (a - b).abs() <= rel * b.abs()
        }
    }

    /// Central differences at h = 1e-6 carry ~1e-8 absolute round-off once
    /// the degree-5/6 monomial coefficients grow large.
    fn fd_close(d: usize, a: f64, b: f64) -> bool {
        close(a, b, 1e-6, 1e-6) || (d >= 5 && (a - b).abs() <= 1e-7)
    }

    #[test]
    fn gradient_matches_central_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = 1e-6;
        for d in 1..=6 {
            let b = LagrangeBasis::<f64>::new(d).unwrap();
            for _ in 0..5 {
                let p = random_inside(&mut rng);
                let g = b.eval_grad(&p);
                for k in 0..3 {
                    let mut dir = [0.0; 3];
                    dir[k] = 1.0;
                    let vp = b.eval(&p.offset(dir, h));
                    let vm = b.eval(&p.offset(dir, -h));
                    for j in 0..b.node_count() {
                        let fd = (vp[j] - vm[j]) / (2.0 * h);
                        assert!(fd_close(d, g[j][k], fd), "d={d} j={j} {} {}", g[j][k], fd);
                    }
                }
            }
        }
    }

    #[test]
    fn hessian_matches_central_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-6;
        for d in 1..=6 {
            let b = LagrangeBasis::<f64>::new(d).unwrap();
            for _ in 0..5 {
                let p = random_inside(&mut rng);
                let hs = b.eval_hess(&p);
                for k in 0..3 {
                    let mut dir = [0.0; 3];
                    dir[k] = 1.0;
                    let gp = b.eval_grad(&p.offset(dir, h));
                    let gm = b.eval_grad(&p.offset(dir, -h));
                    for j in 0..b.node_count() {
                        for i in 0..3 {
                            let fd = (gp[j][i] - gm[j][i]) / (2.0 * h);
                            assert!(fd_close(d, hs[j][i][k], fd), "d={d} {} {}", hs[j][i][k], fd);
                            assert_eq!(hs[j][i][k], hs[j][k][i]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn vertex_nodes() {
        for d in 1..=6 {
            let b = LagrangeBasis::<f64>::new(d).unwrap();
            for v in 0..4 {
                assert_eq!(b.nodes()[vertex_node(d, v)], crate::refcell::vertex(v));
            }
        }
    }

    #[test]
    fn single_precision_partition_of_unity() {
        let b = LagrangeBasis::<f32>::new(3).unwrap();
        let s: f32 = b.eval(&RefPoint::new(0.1, 0.2, 0.3)).iter().sum();
        assert!((s - 1.0).abs() < 1e-5);
    }
}
